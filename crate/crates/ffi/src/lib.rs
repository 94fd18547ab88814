//! C interface to the fairmatch engine.
//!
//! Every function returns an [`FmStatus`]. On failure a message is kept per
//! thread and can be read with [`fm_last_error`]. Objects are handed out as
//! opaque pointers and released with their matching `*_free` function;
//! strings returned through `char **` are released with [`fm_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use fairmatch::dataset::{load_dataset, DataFormat, Dataset, SyntheticConfig};
use fairmatch::experiment::{
    recommend, run_experiment, write_artifacts, ExperimentConfig, RunArtifact,
};
use fairmatch::fairness::GroupLabels;
use fairmatch::recommenders::{Algorithm, Recommendations};
use fairmatch::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Io = 4,
    Parse = 5,
    Runtime = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FmAlgorithm {
    FairMatch = 0,
    Cf = 1,
    Recon = 2,
    GaleShapley = 3,
}

impl From<FmAlgorithm> for Algorithm {
    fn from(a: FmAlgorithm) -> Self {
        match a {
            FmAlgorithm::FairMatch => Algorithm::FairMatch,
            FmAlgorithm::Cf => Algorithm::Cf,
            FmAlgorithm::Recon => Algorithm::Recon,
            FmAlgorithm::GaleShapley => Algorithm::GaleShapley,
        }
    }
}

/// Experiment settings.
pub struct FmConfig(ExperimentConfig);

/// A loaded or generated market.
pub struct FmDataset(Dataset);

/// Result of a full experiment run.
pub struct FmArtifact(RunArtifact);

/// Lists produced by one recommender, with the dataset's user ids.
pub struct FmRecommendations {
    recs: Recommendations,
    ids: Vec<String>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(FmStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Config(_) => FmStatus::Config,
            Error::Io { .. } => FmStatus::Io,
            Error::Parse { .. } | Error::Json(_) => FmStatus::Parse,
            _ => FmStatus::Runtime,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
}

/// Runs `body`, records any failure and contains panics.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> FmStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => FmStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("internal error: {message}"));
            FmStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(FmStatus::NullPointer, format!("{name} is null")))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(FmStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(FmStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(
            FmStatus::NullPointer,
            "output pointer is null".into(),
        ));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(
            FmStatus::NullPointer,
            "output pointer is null".into(),
        ));
    }
    let c =
        CString::new(s).map_err(|_| Failure(FmStatus::Runtime, "string contains NUL".into()))?;
    *out = c.into_raw();
    Ok(())
}

unsafe fn check_out<T>(out: *mut *mut T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(
            FmStatus::NullPointer,
            "output pointer is null".into(),
        ));
    }
    *out = ptr::null_mut();
    Ok(())
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next fairmatch call on the same thread.
#[no_mangle]
pub extern "C" fn fm_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Default settings with the given seed.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn fm_config_new(seed: u64, out: *mut *mut FmConfig) -> FmStatus {
    guard(|| {
        check_out(out)?;
        put(out, FmConfig(ExperimentConfig::new(seed)))
    })
}

/// Parses and validates an experiment TOML document.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fm_config_from_toml(
    toml: *const c_char,
    out: *mut *mut FmConfig,
) -> FmStatus {
    guard(|| {
        check_out(out)?;
        let config = ExperimentConfig::from_toml_str(text(toml, "toml")?)?;
        config.validate()?;
        put(out, FmConfig(config))
    })
}

/// The config as TOML with every default filled in.
///
/// # Safety
/// `config` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fm_config_to_toml(
    config: *const FmConfig,
    out: *mut *mut c_char,
) -> FmStatus {
    guard(|| {
        check_out(out)?;
        let config = borrow(config, "config")?;
        put_string(out, config.0.to_toml_string())
    })
}

/// Sets the list length.
///
/// # Safety
/// `config` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn fm_config_set_k(config: *mut FmConfig, k: usize) -> FmStatus {
    guard(|| {
        let config = config
            .as_mut()
            .ok_or_else(|| Failure(FmStatus::NullPointer, "config is null".into()))?;
        if k == 0 {
            return Err(Failure(FmStatus::Config, "K must be at least 1".into()));
        }
        config.0.k = k;
        Ok(())
    })
}

/// # Safety
/// `config` must be NULL or come from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fm_config_free(config: *mut FmConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Generates a synthetic market. `json` holds generator settings (NULL or
/// "{}" for defaults); `seed` replaces any seed it contains.
///
/// # Safety
/// `json` must be NULL or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fm_dataset_synthetic(
    json: *const c_char,
    seed: u64,
    out: *mut *mut FmDataset,
) -> FmStatus {
    guard(|| {
        check_out(out)?;
        let mut config: SyntheticConfig = if json.is_null() {
            SyntheticConfig::default()
        } else {
            serde_json::from_str(text(json, "json")?)
                .map_err(|e| Failure(FmStatus::Parse, e.to_string()))?
        };
        config.seed = seed;
        config.validate()?;
        put(out, FmDataset(Dataset::synthetic(&config)?))
    })
}

/// Loads profiles and interactions. `format` is "csv", "jsonl" or NULL to
/// infer from the profile file extension.
///
/// # Safety
/// Path arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fm_dataset_load(
    profiles: *const c_char,
    interactions: *const c_char,
    format: *const c_char,
    out: *mut *mut FmDataset,
) -> FmStatus {
    guard(|| {
        check_out(out)?;
        let profiles = Path::new(text(profiles, "profiles")?);
        let interactions = Path::new(text(interactions, "interactions")?);
        let format = if format.is_null() {
            DataFormat::from_path(profiles)
        } else {
            text(format, "format")?
                .parse()
                .map_err(|e: String| Failure(FmStatus::Config, e))?
        };
        put(
            out,
            FmDataset(load_dataset(profiles, interactions, format)?),
        )
    })
}

/// Number of users on both sides.
///
/// # Safety
/// `dataset` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn fm_dataset_len(dataset: *const FmDataset, out: *mut usize) -> FmStatus {
    guard(|| {
        let dataset = borrow(dataset, "dataset")?;
        let out = out
            .as_mut()
            .ok_or_else(|| Failure(FmStatus::NullPointer, "output pointer is null".into()))?;
        *out = dataset.0.len();
        Ok(())
    })
}

/// Hex SHA-256 digest of the dataset contents.
///
/// # Safety
/// `dataset` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fm_dataset_digest(
    dataset: *const FmDataset,
    out: *mut *mut c_char,
) -> FmStatus {
    guard(|| {
        check_out(out)?;
        put_string(out, borrow(dataset, "dataset")?.0.digest())
    })
}

/// # Safety
/// `dataset` must be NULL or come from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fm_dataset_free(dataset: *mut FmDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Recommends on the full interaction graph of `dataset`, using the list
/// length and algorithm settings of `config`.
///
/// # Safety
/// Handles must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fm_recommend(
    dataset: *const FmDataset,
    config: *const FmConfig,
    algorithm: FmAlgorithm,
    out: *mut *mut FmRecommendations,
) -> FmStatus {
    guard(|| {
        check_out(out)?;
        let dataset = &borrow(dataset, "dataset")?.0;
        let config = &borrow(config, "config")?.0;
        config.validate()?;
        let graph = dataset.graph();
        let labels = GroupLabels::from_dataset(dataset, config.fair_match.group_attr)?;
        let recs = recommend(algorithm.into(), dataset, &graph, &labels, config)?;
        let ids = dataset.profiles().iter().map(|p| p.id.clone()).collect();
        put(out, FmRecommendations { recs, ids })
    })
}

/// Number of lists, one per user.
///
/// # Safety
/// `recs` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn fm_recommendations_len(
    recs: *const FmRecommendations,
    out: *mut usize,
) -> FmStatus {
    guard(|| {
        let recs = borrow(recs, "recommendations")?;
        let out = out
            .as_mut()
            .ok_or_else(|| Failure(FmStatus::NullPointer, "output pointer is null".into()))?;
        *out = recs.recs.lists.len();
        Ok(())
    })
}

/// All lists as JSON: `{"k": K, "lists": [{"user", "items": [{"candidate",
/// "score"}], "cold_start", "infeasible"}]}` with user ids.
///
/// # Safety
/// `recs` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fm_recommendations_json(
    recs: *const FmRecommendations,
    out: *mut *mut c_char,
) -> FmStatus {
    guard(|| {
        check_out(out)?;
        let FmRecommendations { recs, ids } = borrow(recs, "recommendations")?;
        let lists: Vec<serde_json::Value> = recs
            .lists
            .iter()
            .map(|l| {
                let items: Vec<serde_json::Value> = l
                    .items
                    .iter()
                    .map(|s| serde_json::json!({ "candidate": ids[s.candidate], "score": s.score }))
                    .collect();
                serde_json::json!({
                    "user": ids[l.user],
                    "items": items,
                    "cold_start": l.cold_start,
                    "infeasible": l.infeasible,
                })
            })
            .collect();
        put_string(
            out,
            serde_json::json!({ "k": recs.k, "lists": lists }).to_string(),
        )
    })
}

/// # Safety
/// `recs` must be NULL or come from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fm_recommendations_free(recs: *mut FmRecommendations) {
    if !recs.is_null() {
        drop(Box::from_raw(recs));
    }
}

/// Runs the full experiment described by `config`. Nothing is written.
///
/// # Safety
/// `config` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fm_run_experiment(
    config: *const FmConfig,
    out: *mut *mut FmArtifact,
) -> FmStatus {
    guard(|| {
        check_out(out)?;
        let artifact = run_experiment(&borrow(config, "config")?.0)?;
        put(out, FmArtifact(artifact))
    })
}

/// The run as pretty JSON without timings, byte-stable across reruns.
///
/// # Safety
/// `artifact` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fm_artifact_json(
    artifact: *const FmArtifact,
    out: *mut *mut c_char,
) -> FmStatus {
    guard(|| {
        check_out(out)?;
        let artifact = borrow(artifact, "artifact")?;
        let json =
            serde_json::to_string_pretty(&artifact.0.without_timings()).map_err(Error::from)?;
        put_string(out, json)
    })
}

/// Writes report.json, report.csv, report.md and timings.json into `dir`.
///
/// # Safety
/// `artifact` must come from this library; `dir` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn fm_artifact_write(
    artifact: *const FmArtifact,
    dir: *const c_char,
) -> FmStatus {
    guard(|| {
        let artifact = borrow(artifact, "artifact")?;
        write_artifacts(&artifact.0, Path::new(text(dir, "dir")?))?;
        Ok(())
    })
}

/// # Safety
/// `artifact` must be NULL or come from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fm_artifact_free(artifact: *mut FmArtifact) {
    if !artifact.is_null() {
        drop(Box::from_raw(artifact));
    }
}
