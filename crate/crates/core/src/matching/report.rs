use super::MatchResult;

pub const SCORE_CSV_HEADER: &str = "query_id,gallery_id,variant,score,fused";

/// Formats with 9 significant digits, trailing zeros trimmed.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_finite() { "0".to_string() } else { x.to_string() };
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..=9).contains(&exp) {
        return format!("{x:.8e}");
    }
    let decimals = (8 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".to_string()
    } else {
        s
    }
}

/// One CSV row per (gallery hit, variant), header included.
pub fn score_csv(query_id: &str, results: &[MatchResult]) -> String {
    let mut out = String::from(SCORE_CSV_HEADER);
    out.push('\n');
    out.push_str(&score_csv_rows(query_id, results));
    out
}

/// [`score_csv`] without the header, for appending several queries.
pub fn score_csv_rows(query_id: &str, results: &[MatchResult]) -> String {
    let mut out = String::new();
    for r in results {
        for (v, &s) in r.per_variant_scores.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                query_id,
                r.gallery_id,
                v,
                format_sig9(s),
                format_sig9(r.fused_score)
            ));
        }
    }
    out
}
