//! C ABI over trained connecte checkpoints.
//!
//! A model is loaded into an opaque [`CteModel`] handle and released with
//! [`cte_model_free`]. Every fallible call returns a [`CteStatus`]; on failure a
//! message is available from [`cte_last_error`] on the same thread. Results are
//! written through out-pointers, which are left untouched on failure.
//!
//! The header `include/connecte.h` is regenerated by the build script.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::ptr;

use connecte::data::{Dataset, KnowledgeBase};
use connecte::eval::predict_topk;
use connecte::model::{load_checkpoint, score_composite, Checkpoint, ScoreMode};
use connecte::Error;

/// Loaded parameters, vocabularies and training graph.
pub struct CteModel {
    ckpt: Checkpoint,
    kb: KnowledgeBase,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CteStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Data = 4,
    Checkpoint = 5,
    Config = 6,
    NotFound = 7,
    OutOfRange = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Scoring modes accepted by [`cte_predict_topk`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CteMode {
    E2t = 0,
    Composite = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CteDims {
    pub kappa: usize,
    pub ell: usize,
    pub entities: usize,
    pub relations: usize,
    pub types: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(CteStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Io { .. } => CteStatus::Io,
            Error::Checkpoint { .. } | Error::DimensionMismatch { .. } => CteStatus::Checkpoint,
            Error::Config(_) => CteStatus::Config,
            Error::UnknownName { .. } => CteStatus::NotFound,
            _ => CteStatus::Data,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|l| *l.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CteStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CteStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            CteStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(CteStatus::NullArgument, format!("`{what}` is null"))
}

unsafe fn model<'a>(m: *const CteModel) -> Result<&'a CteModel, Failure> {
    m.as_ref().ok_or_else(|| null("model"))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CteStatus::InvalidUtf8, format!("`{what}` is not valid UTF-8")))
}

fn check_id(id: u32, n: usize, kind: &str) -> Result<(), Failure> {
    if (id as usize) < n {
        Ok(())
    } else {
        Err(Failure(CteStatus::OutOfRange, format!("{kind} id {id} out of range (have {n})")))
    }
}

fn check_lambda(lambda: f64) -> Result<(), Failure> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Failure(CteStatus::OutOfRange, format!("lambda must lie in [0, 1], got {lambda}")))
    }
}

fn load(checkpoint: &Path, data_dir: Option<PathBuf>) -> Result<CteModel, Failure> {
    let ckpt = load_checkpoint(checkpoint)?;
    let dir = match (data_dir, &ckpt.manifest.dataset) {
        (Some(d), _) => d,
        (None, Some(r)) => PathBuf::from(&r.dir),
        (None, None) => {
            return Err(Failure(CteStatus::Config, "checkpoint records no dataset directory".into()))
        }
    };
    let ds = Dataset::load(&dir, Some(ckpt.vocabs.clone()))?;
    Ok(CteModel { ckpt, kb: ds.kb })
}

/// Message of the most recent failed call on this thread, or an empty string.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cte_last_error() -> *const c_char {
    LAST_ERROR.with(|l| l.borrow().as_ptr())
}

/// Loads a checkpoint directory. `data_dir` may be null, in which case the
/// prepared dataset recorded in the checkpoint manifest is used.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cte_model_load(
    checkpoint_dir: *const c_char,
    data_dir: *const c_char,
    out_model: *mut *mut CteModel,
) -> CteStatus {
    guard(|| {
        let slot = out(out_model, "out_model")?;
        let ck = str_arg(checkpoint_dir, "checkpoint_dir")?;
        let data = if data_dir.is_null() {
            None
        } else {
            Some(PathBuf::from(str_arg(data_dir, "data_dir")?))
        };
        let m = load(Path::new(ck), data)?;
        *slot = Box::into_raw(Box::new(m));
        Ok(())
    })
}

/// Releases a handle from [`cte_model_load`]. Null is ignored.
///
/// # Safety
/// `model` must come from [`cte_model_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cte_model_free(model: *mut CteModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle; `out_dims` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cte_model_dims(model: *const CteModel, out_dims: *mut CteDims) -> CteStatus {
    guard(|| {
        let m = self::model(model)?;
        let o = out(out_dims, "out_dims")?;
        let d = m.ckpt.params.dims();
        *o = CteDims {
            kappa: d.kappa,
            ell: d.ell,
            entities: d.entities,
            relations: d.relations,
            types: d.types,
        };
        Ok(())
    })
}

/// λ the model was trained with.
///
/// # Safety
/// `model` must be a live handle; `out_lambda` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cte_model_lambda(model: *const CteModel, out_lambda: *mut f64) -> CteStatus {
    guard(|| {
        let m = self::model(model)?;
        *out(out_lambda, "out_lambda")? = m.ckpt.config.lambda;
        Ok(())
    })
}

#[derive(Clone, Copy)]
enum Kind {
    Entity,
    Relation,
    Type,
}

impl CteModel {
    fn vocab(&self, k: Kind) -> &connecte::data::Vocab {
        let v = &self.ckpt.vocabs;
        match k {
            Kind::Entity => &v.entities,
            Kind::Relation => &v.relations,
            Kind::Type => &v.types,
        }
    }
}

unsafe fn lookup(model: *const CteModel, kind: Kind, name: *const c_char, out_id: *mut u32) -> CteStatus {
    guard(|| {
        let m = self::model(model)?;
        let o = out(out_id, "out_id")?;
        let name = str_arg(name, "name")?;
        match m.vocab(kind).get(name) {
            Some(id) => {
                *o = id;
                Ok(())
            }
            None => Err(Failure(CteStatus::NotFound, format!("unknown name `{name}`"))),
        }
    })
}

unsafe fn name_of(
    model: *const CteModel,
    kind: Kind,
    id: u32,
    buf: *mut c_char,
    cap: usize,
    out_len: *mut usize,
) -> CteStatus {
    guard(|| {
        let m = self::model(model)?;
        let v = m.vocab(kind);
        check_id(id, v.len(), "symbol")?;
        let name = v.name(id).unwrap_or_default();
        if !out_len.is_null() {
            *out_len = name.len();
        }
        if cap < name.len() + 1 {
            return Err(Failure(
                CteStatus::BufferTooSmall,
                format!("name needs {} bytes, buffer holds {cap}", name.len() + 1),
            ));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(name.as_ptr().cast::<c_char>(), buf, name.len());
        *buf.add(name.len()) = 0;
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle, `name` NUL-terminated, `out_id` writable.
#[no_mangle]
pub unsafe extern "C" fn cte_entity_id(model: *const CteModel, name: *const c_char, out_id: *mut u32) -> CteStatus {
    lookup(model, Kind::Entity, name, out_id)
}

/// # Safety
/// As [`cte_entity_id`].
#[no_mangle]
pub unsafe extern "C" fn cte_relation_id(model: *const CteModel, name: *const c_char, out_id: *mut u32) -> CteStatus {
    lookup(model, Kind::Relation, name, out_id)
}

/// # Safety
/// As [`cte_entity_id`].
#[no_mangle]
pub unsafe extern "C" fn cte_type_id(model: *const CteModel, name: *const c_char, out_id: *mut u32) -> CteStatus {
    lookup(model, Kind::Type, name, out_id)
}

/// Copies the NUL-terminated name into `buf`. `out_len` (nullable) receives the
/// name length without the terminator, also when the buffer is too small.
///
/// # Safety
/// `model` must be a live handle and `buf` writable for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn cte_entity_name(
    model: *const CteModel,
    id: u32,
    buf: *mut c_char,
    cap: usize,
    out_len: *mut usize,
) -> CteStatus {
    name_of(model, Kind::Entity, id, buf, cap, out_len)
}

/// See [`cte_entity_name`].
///
/// # Safety
/// As [`cte_entity_name`].
#[no_mangle]
pub unsafe extern "C" fn cte_type_name(
    model: *const CteModel,
    id: u32,
    buf: *mut c_char,
    cap: usize,
    out_len: *mut usize,
) -> CteStatus {
    name_of(model, Kind::Type, id, buf, cap, out_len)
}

/// `‖e_h + r − e_t‖²`.
///
/// # Safety
/// `model` must be a live handle; `out_score` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cte_score_transe(
    model: *const CteModel,
    head: u32,
    rel: u32,
    tail: u32,
    out_score: *mut f64,
) -> CteStatus {
    guard(|| {
        let m = self::model(model)?;
        let o = out(out_score, "out_score")?;
        let d = m.ckpt.params.dims();
        check_id(head, d.entities, "entity")?;
        check_id(tail, d.entities, "entity")?;
        check_id(rel, d.relations, "relation")?;
        *o = m.ckpt.params.score_transe(head, rel, tail);
        Ok(())
    })
}

/// `‖M e − t‖²`.
///
/// # Safety
/// As [`cte_score_transe`].
#[no_mangle]
pub unsafe extern "C" fn cte_score_e2t(model: *const CteModel, entity: u32, ty: u32, out_score: *mut f64) -> CteStatus {
    guard(|| {
        let m = self::model(model)?;
        let o = out(out_score, "out_score")?;
        let d = m.ckpt.params.dims();
        check_id(entity, d.entities, "entity")?;
        check_id(ty, d.types, "type")?;
        *o = m.ckpt.params.score_e2t(entity, ty);
        Ok(())
    })
}

/// `‖t_h + r − t_t‖²` in type space.
///
/// # Safety
/// As [`cte_score_transe`].
#[no_mangle]
pub unsafe extern "C" fn cte_score_trt(
    model: *const CteModel,
    head_type: u32,
    rel: u32,
    tail_type: u32,
    out_score: *mut f64,
) -> CteStatus {
    guard(|| {
        let m = self::model(model)?;
        let o = out(out_score, "out_score")?;
        let d = m.ckpt.params.dims();
        check_id(head_type, d.types, "type")?;
        check_id(tail_type, d.types, "type")?;
        check_id(rel, d.relations, "relation")?;
        *o = m.ckpt.params.score_trt(head_type, rel, tail_type);
        Ok(())
    })
}

/// Composite typing score of `(entity, ty)` over the training neighborhood.
///
/// # Safety
/// As [`cte_score_transe`].
#[no_mangle]
pub unsafe extern "C" fn cte_score_composite(
    model: *const CteModel,
    entity: u32,
    ty: u32,
    lambda: f64,
    out_score: *mut f64,
) -> CteStatus {
    guard(|| {
        let m = self::model(model)?;
        let o = out(out_score, "out_score")?;
        let d = m.ckpt.params.dims();
        check_id(entity, d.entities, "entity")?;
        check_id(ty, d.types, "type")?;
        check_lambda(lambda)?;
        *o = score_composite(&m.ckpt.params, &m.kb, entity, ty, lambda);
        Ok(())
    })
}

/// Writes the `k` lowest-scoring types of `entity`, ascending with ties broken
/// by id, into `out_types` and `out_scores` (each with room for `k` values).
/// `out_count` receives `min(k, types)`. `mode` is a [`CteMode`] value.
///
/// # Safety
/// `model` must be a live handle; the output arrays must hold `k` elements.
#[no_mangle]
pub unsafe extern "C" fn cte_predict_topk(
    model: *const CteModel,
    entity: u32,
    k: usize,
    mode: c_int,
    lambda: f64,
    out_types: *mut u32,
    out_scores: *mut f64,
    out_count: *mut usize,
) -> CteStatus {
    guard(|| {
        let m = self::model(model)?;
        let count = out(out_count, "out_count")?;
        if out_types.is_null() || out_scores.is_null() {
            return Err(null("out_types/out_scores"));
        }
        let mode = match mode {
            0 => ScoreMode::E2t,
            1 => ScoreMode::Composite,
            other => return Err(Failure(CteStatus::OutOfRange, format!("unknown mode {other}"))),
        };
        check_id(entity, m.ckpt.params.dims().entities, "entity")?;
        check_lambda(lambda)?;
        let top = predict_topk(&m.ckpt.params, &m.kb, entity, k, lambda, mode);
        for (i, (t, s)) in top.iter().enumerate() {
            *out_types.add(i) = *t;
            *out_scores.add(i) = *s;
        }
        *count = top.len();
        Ok(())
    })
}
