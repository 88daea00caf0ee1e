//! Pose files: one `<image-id> <cx> <cy> <theta>` record per line. Blank lines
//! and lines starting with `#` are ignored.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

use super::Pose2D;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PoseTable {
    entries: Vec<(String, Pose2D)>,
    index: HashMap<String, usize>,
}

impl PoseTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or replaces the pose for `id`, keeping first-insertion order.
    pub fn insert(&mut self, id: impl Into<String>, pose: Pose2D) {
        let id = id.into();
        match self.index.get(&id) {
            Some(&i) => self.entries[i].1 = pose,
            None => {
                self.index.insert(id.clone(), self.entries.len());
                self.entries.push((id, pose));
            }
        }
    }

    pub fn get(&self, id: &str) -> Option<&Pose2D> {
        self.index.get(id).map(|&i| &self.entries[i].1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Pose2D)> {
        self.entries.iter().map(|(id, p)| (id.as_str(), p))
    }

    pub fn parse(text: &str) -> Result<PoseTable> {
        let mut table = PoseTable::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(Error::Config(format!(
                    "pose line {}: expected `<id> <cx> <cy> <theta>`",
                    lineno + 1
                )));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Config(format!("pose line {}: bad number `{s}`", lineno + 1)))
            };
            let pose = Pose2D::new(num(fields[1])?, num(fields[2])?, num(fields[3])?)?;
            table.insert(fields[0], pose);
        }
        Ok(table)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (id, p) in &self.entries {
            out.push_str(&format!("{} {} {} {}\n", id, p.cx(), p.cy(), p.theta()));
        }
        out
    }
}

pub fn read_pose_file(path: impl AsRef<Path>) -> Result<PoseTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    PoseTable::parse(&text)
}

pub fn write_pose_file(path: impl AsRef<Path>, table: &PoseTable) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, table.to_text()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        let t = PoseTable::parse("# poses\na 1 2 3\n\nb 10.5 -4 190\n").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.get("b").unwrap().theta(), -170.0);
        let again = PoseTable::parse(&t.to_text()).unwrap();
        assert_eq!(again, t);
    }

    #[test]
    fn rejects_malformed() {
        assert!(PoseTable::parse("a 1 2").is_err());
        assert!(PoseTable::parse("a 1 x 3").is_err());
        assert!(PoseTable::parse("a 1 nan 3").is_err());
    }
}
