//! C ABI over `densefp`.
//!
//! Every fallible call returns a [`DfpStatus`]; on failure a message for the
//! calling thread is available from [`dfp_last_error_message`]. Objects are
//! opaque handles created by `*_new`/`*_read`/`*_decode`/`*_build` calls and
//! released with the matching `*_free`. Passing NULL to any `*_free` is a
//! no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use densefp::cli::{describe_at_pose, prepare, LoadedEnhancement};
use densefp::descriptor::{decode, encode, read_descriptor_file, DenseDescriptor};
use densefp::matching::{match_fused, match_score, GalleryIndex};
use densefp::{Error, GrayImage, Pose2D};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DfpStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    SizeMismatch = 3,
    Format = 4,
    DuplicateId = 5,
    Io = 6,
    Image = 7,
    NoForeground = 8,
    InvalidPose = 9,
    Panic = 10,
    Other = 11,
}

impl From<&Error> for DfpStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::Config(_) | Error::EmptyScores | Error::Label(_) => {
                DfpStatus::InvalidArgument
            }
            Error::SizeMismatch(_) => DfpStatus::SizeMismatch,
            Error::Format(_) => DfpStatus::Format,
            Error::DuplicateId(_) => DfpStatus::DuplicateId,
            Error::Io { .. } => DfpStatus::Io,
            Error::Image { .. } => DfpStatus::Image,
            Error::NoForeground => DfpStatus::NoForeground,
            Error::InvalidPose(_) | Error::PoseMissing(_) => DfpStatus::InvalidPose,
            _ => DfpStatus::Other,
        }
    }
}

/// Pose of a print on its image: center in pixels, orientation in degrees
/// (counter-clockwise, 0 = finger pointing up).
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct DfpPose {
    pub cx: f64,
    pub cy: f64,
    pub theta: f64,
}

/// One search hit.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct DfpMatch {
    pub gallery_index: usize,
    pub fused_score: f64,
    pub best_variant: usize,
}

/// The variants of one descriptor file.
pub struct DfpDescriptorSet {
    variants: Vec<DenseDescriptor>,
}

/// Collects `(id, descriptor set)` entries before building a gallery.
pub struct DfpGalleryBuilder {
    entries: Vec<(String, Vec<DenseDescriptor>)>,
}

/// Immutable searchable gallery.
pub struct DfpGallery {
    index: GalleryIndex,
    ids: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (DfpStatus, String)>) -> DfpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            DfpStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            DfpStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (DfpStatus, String) {
    (DfpStatus::from(&e), e.to_string())
}

fn null(what: &str) -> (DfpStatus, String) {
    (DfpStatus::NullArgument, format!("{what} is NULL"))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (DfpStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (DfpStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, (DfpStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn dfp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dfp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Decodes an in-memory descriptor file.
///
/// # Safety
/// `bytes` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dfp_descriptors_decode(
    bytes: *const u8,
    len: usize,
    out: *mut *mut DfpDescriptorSet,
) -> DfpStatus {
    guard(|| {
        if bytes.is_null() || out.is_null() {
            return Err(null("bytes or out"));
        }
        let variants = decode(std::slice::from_raw_parts(bytes, len)).map_err(lib_err)?;
        *out = boxed(DfpDescriptorSet { variants });
        Ok(())
    })
}

/// Reads a descriptor file from disk.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dfp_descriptors_read(path: *const c_char, out: *mut *mut DfpDescriptorSet) -> DfpStatus {
    guard(|| {
        let path = c_str(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let variants = read_descriptor_file(path).map_err(lib_err)?;
        *out = boxed(DfpDescriptorSet { variants });
        Ok(())
    })
}

/// Extracts a single clean-variant descriptor from an image file. With a
/// NULL `pose` the baseline pose estimate is used.
///
/// # Safety
/// `path` must be a NUL-terminated string, `pose` NULL or readable, `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn dfp_extract_image(
    path: *const c_char,
    pose: *const DfpPose,
    out: *mut *mut DfpDescriptorSet,
) -> DfpStatus {
    guard(|| {
        let path = c_str(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let image = prepare(GrayImage::load(path).map_err(lib_err)?).map_err(lib_err)?;
        let pose = match pose.as_ref() {
            Some(p) => Pose2D::new(p.cx, p.cy, p.theta).map_err(lib_err)?,
            None => densefp::cli::baseline_pose(&image).map_err(lib_err)?,
        };
        let d = describe_at_pose(&image, &pose, &LoadedEnhancement::Clean).map_err(lib_err)?;
        *out = boxed(DfpDescriptorSet { variants: vec![d] });
        Ok(())
    })
}

/// Serializes a set. Release the buffer with [`dfp_bytes_free`].
///
/// # Safety
/// `set` must be a live handle; `out` and `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dfp_descriptors_encode(
    set: *const DfpDescriptorSet,
    out: *mut *mut u8,
    out_len: *mut usize,
) -> DfpStatus {
    guard(|| {
        let set = handle(set, "set")?;
        if out.is_null() || out_len.is_null() {
            return Err(null("out or out_len"));
        }
        let bytes = encode(&set.variants).map_err(lib_err)?.into_boxed_slice();
        *out_len = bytes.len();
        *out = Box::into_raw(bytes).cast();
        Ok(())
    })
}

/// Frees a buffer returned by [`dfp_descriptors_encode`].
///
/// # Safety
/// `ptr`/`len` must come from one `dfp_descriptors_encode` call.
#[no_mangle]
pub unsafe extern "C" fn dfp_bytes_free(ptr: *mut u8, len: usize) {
    if !ptr.is_null() {
        drop(Box::from_raw(ptr::slice_from_raw_parts_mut(ptr, len)));
    }
}

/// Number of variants; 0 for NULL.
///
/// # Safety
/// `set` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dfp_descriptors_variants(set: *const DfpDescriptorSet) -> usize {
    set.as_ref().map_or(0, |s| s.variants.len())
}

/// Shape `(channels, grid_h, grid_w)` of one variant.
///
/// # Safety
/// `set` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn dfp_descriptors_shape(
    set: *const DfpDescriptorSet,
    variant: usize,
    channels: *mut usize,
    grid_h: *mut usize,
    grid_w: *mut usize,
) -> DfpStatus {
    guard(|| {
        let set = handle(set, "set")?;
        if channels.is_null() || grid_h.is_null() || grid_w.is_null() {
            return Err(null("shape outputs"));
        }
        let d = variant_of(set, variant)?;
        (*channels, *grid_h, *grid_w) = d.shape();
        Ok(())
    })
}

fn variant_of(set: &DfpDescriptorSet, variant: usize) -> Result<&DenseDescriptor, (DfpStatus, String)> {
    set.variants.get(variant).ok_or_else(|| {
        (
            DfpStatus::InvalidArgument,
            format!("variant {variant} out of range ({} variants)", set.variants.len()),
        )
    })
}

/// # Safety
/// `set` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dfp_descriptors_free(set: *mut DfpDescriptorSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Masked cosine score between variant `variant` of two sets.
///
/// # Safety
/// `query` and `gallery` must be live handles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dfp_match_score(
    query: *const DfpDescriptorSet,
    gallery: *const DfpDescriptorSet,
    variant: usize,
    out: *mut f64,
) -> DfpStatus {
    guard(|| {
        let (q, g) = (handle(query, "query")?, handle(gallery, "gallery")?);
        if out.is_null() {
            return Err(null("out"));
        }
        *out = match_score(variant_of(q, variant)?, variant_of(g, variant)?).map_err(lib_err)?;
        Ok(())
    })
}

/// Maximum of the per-variant scores; `best_variant` may be NULL.
///
/// # Safety
/// `query` and `gallery` must be live handles; `fused` writable.
#[no_mangle]
pub unsafe extern "C" fn dfp_match_fused(
    query: *const DfpDescriptorSet,
    gallery: *const DfpDescriptorSet,
    fused: *mut f64,
    best_variant: *mut usize,
) -> DfpStatus {
    guard(|| {
        let (q, g) = (handle(query, "query")?, handle(gallery, "gallery")?);
        if fused.is_null() {
            return Err(null("fused"));
        }
        let (f, best, _) = match_fused(&q.variants, &g.variants).map_err(lib_err)?;
        *fused = f;
        if !best_variant.is_null() {
            *best_variant = best;
        }
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn dfp_gallery_builder_new() -> *mut DfpGalleryBuilder {
    boxed(DfpGalleryBuilder { entries: Vec::new() })
}

/// Appends a copy of `set` under `id`. Validation happens in
/// [`dfp_gallery_build`].
///
/// # Safety
/// `builder` and `set` must be live handles; `id` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn dfp_gallery_builder_add(
    builder: *mut DfpGalleryBuilder,
    id: *const c_char,
    set: *const DfpDescriptorSet,
) -> DfpStatus {
    guard(|| {
        let b = builder.as_mut().ok_or_else(|| null("builder"))?;
        let id = c_str(id, "id")?;
        let set = handle(set, "set")?;
        b.entries.push((id.to_string(), set.variants.clone()));
        Ok(())
    })
}

/// Consumes the builder (even on failure) and builds a gallery.
///
/// # Safety
/// `builder` must be a live handle, not used afterwards; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dfp_gallery_build(builder: *mut DfpGalleryBuilder, out: *mut *mut DfpGallery) -> DfpStatus {
    guard(|| {
        if builder.is_null() {
            return Err(null("builder"));
        }
        let b = Box::from_raw(builder);
        if out.is_null() {
            return Err(null("out"));
        }
        let index = GalleryIndex::enroll(b.entries).map_err(lib_err)?;
        let ids = index
            .ids()
            .iter()
            .map(|s| CString::new(s.as_str()).unwrap_or_default())
            .collect();
        *out = boxed(DfpGallery { index, ids });
        Ok(())
    })
}

/// # Safety
/// `builder` must be NULL or a handle not yet freed or built.
#[no_mangle]
pub unsafe extern "C" fn dfp_gallery_builder_free(builder: *mut DfpGalleryBuilder) {
    if !builder.is_null() {
        drop(Box::from_raw(builder));
    }
}

/// Number of enrolled ids; 0 for NULL.
///
/// # Safety
/// `gallery` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dfp_gallery_len(gallery: *const DfpGallery) -> usize {
    gallery.as_ref().map_or(0, |g| g.index.len())
}

/// Id at insertion index `index`, owned by the gallery; NULL when out of
/// range.
///
/// # Safety
/// `gallery` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dfp_gallery_id(gallery: *const DfpGallery, index: usize) -> *const c_char {
    gallery
        .as_ref()
        .and_then(|g| g.ids.get(index))
        .map_or(ptr::null(), |s| s.as_ptr())
}

/// Writes up to `min(top_k, capacity)` hits, best first, and their count.
///
/// # Safety
/// `gallery`, `query` must be live handles; `results` must have room for
/// `capacity` entries; `n_results` writable.
#[no_mangle]
pub unsafe extern "C" fn dfp_gallery_search(
    gallery: *const DfpGallery,
    query: *const DfpDescriptorSet,
    top_k: usize,
    results: *mut DfpMatch,
    capacity: usize,
    n_results: *mut usize,
) -> DfpStatus {
    guard(|| {
        let (g, q) = (handle(gallery, "gallery")?, handle(query, "query")?);
        if n_results.is_null() || (results.is_null() && capacity > 0) {
            return Err(null("results or n_results"));
        }
        let hits = g
            .index
            .search(&q.variants, top_k.min(capacity.max(1)))
            .map_err(lib_err)?;
        let n = hits.len().min(capacity);
        for (k, h) in hits.iter().take(n).enumerate() {
            *results.add(k) = DfpMatch {
                gallery_index: h.gallery_index,
                fused_score: h.fused_score,
                best_variant: h.best_variant,
            };
        }
        *n_results = n;
        Ok(())
    })
}

/// # Safety
/// `gallery` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dfp_gallery_free(gallery: *mut DfpGallery) {
    if !gallery.is_null() {
        drop(Box::from_raw(gallery));
    }
}
