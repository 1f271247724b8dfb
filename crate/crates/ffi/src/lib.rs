//! C interface to the solver and evaluation harness.
//!
//! Every entry point returns an [`SlsStatus`]. On failure a description is kept per thread and
//! can be read with [`sls_last_error`]. Objects cross the boundary as opaque handles that the
//! caller releases with the matching `*_free` function. Panics never unwind into C; they are
//! reported as [`SlsStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sls_core::baselines::{
    backward_induction_br, BestResponsePolicy, EvenSplitPolicy, Prior, RandomPolicy, UotPolicy,
};
use sls_core::efg::{build_full_game, DEFAULT_NODE_BUDGET};
use sls_core::harness::{eval_worst_case, play_rng, EvalReport, Game, GameSpec};
use sls_core::search::{play_game, GotPolicy, Policy};
use sls_core::solver::{cfr_solve_with, exploitability, CfrOptions};
use sls_core::{Error, VariantConfig};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    BudgetExceeded = 4,
    OracleFailure = 5,
    GameError = 6,
    Io = 7,
    Panic = 99,
}

/// A built game: item domain, question oracle and variant settings.
pub struct SlsGame {
    game: Game,
}

/// Result of a worst-case evaluation.
pub struct SlsReport {
    report: EvalReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> SlsStatus {
    match err {
        Error::InvalidDomain(_)
        | Error::ItemOutOfDomain { .. }
        | Error::UnknownItem(_)
        | Error::InvalidConfig(_)
        | Error::InvalidPrior(_)
        | Error::EmptySet => SlsStatus::InvalidArgument,
        Error::NodeBudget(_) | Error::EnumerationBudget(_) => SlsStatus::BudgetExceeded,
        Error::NoProgress { .. } | Error::Transport(_) | Error::RetryExhausted { .. } => {
            SlsStatus::OracleFailure
        }
        Error::Io(_) => SlsStatus::Io,
        _ => SlsStatus::GameError,
    }
}

/// Runs `f`, recording any error or panic and translating it into a status.
fn guard(f: impl FnOnce() -> Result<(), (SlsStatus, String)>) -> SlsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SlsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            SlsStatus::Panic
        }
    }
}

fn core(err: Error) -> (SlsStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (SlsStatus, String) {
    (SlsStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (SlsStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (SlsStatus::InvalidUtf8, format!("`{what}` is not valid UTF-8")))
}

unsafe fn game_ref<'a>(game: *const SlsGame) -> Result<&'a SlsGame, (SlsStatus, String)> {
    game.as_ref().ok_or_else(|| null("game"))
}

fn make_policy(name: &str, game: &Game) -> Result<Box<dyn Policy>, (SlsStatus, String)> {
    Ok(match name {
        "got" => Box::new(GotPolicy::new(game.variant.clone())),
        "uot" => Box::new(UotPolicy::new(game.variant.d)),
        "even-split" => Box::new(EvenSplitPolicy),
        "random" => Box::new(RandomPolicy),
        "br" => Box::new(
            BestResponsePolicy::new(
                game.oracle.domain(),
                Prior::uniform(game.oracle.domain().len()),
                game.variant.weighted,
            )
            .map_err(core)?,
        ),
        other => {
            return Err((
                SlsStatus::InvalidArgument,
                format!("unknown policy `{other}`"),
            ))
        }
    })
}

/// Message describing the most recent failure on this thread, or null after a success. The
/// pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn sls_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static, human-readable name of a status code.
#[no_mangle]
pub extern "C" fn sls_status_name(status: SlsStatus) -> *const c_char {
    let s: &'static CStr = match status {
        SlsStatus::Ok => c"ok",
        SlsStatus::NullPointer => c"null pointer",
        SlsStatus::InvalidUtf8 => c"invalid utf-8",
        SlsStatus::InvalidArgument => c"invalid argument",
        SlsStatus::BudgetExceeded => c"budget exceeded",
        SlsStatus::OracleFailure => c"oracle failure",
        SlsStatus::GameError => c"game error",
        SlsStatus::Io => c"i/o error",
        SlsStatus::Panic => c"panic",
    };
    s.as_ptr()
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn sls_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => c"unknown",
    };
    VERSION.as_ptr()
}

/// Builds a game.
///
/// `spec_json` selects the game, for example `{"kind":"fixture","name":"example1"}` or
/// `{"kind":"random-split","n":64,"r":0.25,"seed":7}`. `variant_json` may be null for the
/// default settings.
///
/// # Safety
/// String arguments must be null or point to NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sls_game_new(
    spec_json: *const c_char,
    variant_json: *const c_char,
    out: *mut *mut SlsGame,
) -> SlsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let spec: GameSpec = serde_json::from_str(read_str(spec_json, "spec_json")?)
            .map_err(|e| (SlsStatus::InvalidArgument, format!("game spec: {e}")))?;
        let variant: VariantConfig = if variant_json.is_null() {
            VariantConfig::default()
        } else {
            serde_json::from_str(read_str(variant_json, "variant_json")?)
                .map_err(|e| (SlsStatus::InvalidArgument, format!("variant: {e}")))?
        };
        let game = spec.build(&variant, &[]).map_err(core)?;
        *out = Box::into_raw(Box::new(SlsGame { game }));
        Ok(())
    })
}

/// Releases a game. Null is ignored.
///
/// # Safety
/// `game` must be null or a handle from [`sls_game_new`] that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn sls_game_free(game: *mut SlsGame) {
    if !game.is_null() {
        drop(Box::from_raw(game));
    }
}

/// Number of items in the game.
///
/// # Safety
/// `game` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sls_game_item_count(game: *const SlsGame, out: *mut usize) -> SlsStatus {
    guard(|| {
        let g = game_ref(game)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = g.game.oracle.domain().len();
        Ok(())
    })
}

/// Solves the full game with CFR; writes the value of the average profile and its
/// exploitability. Either output pointer may be null.
///
/// # Safety
/// `game` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn sls_solve_full_game(
    game: *const SlsGame,
    iterations: usize,
    out_value: *mut f64,
    out_exploitability: *mut f64,
) -> SlsStatus {
    guard(|| {
        let g = &game_ref(game)?.game;
        let efg = build_full_game(&g.oracle, &g.variant, DEFAULT_NODE_BUDGET).map_err(core)?;
        let profile = cfr_solve_with(
            &efg,
            &CfrOptions {
                iterations: iterations.max(1),
                plus: g.variant.cfr_plus,
                seed: g.variant.seed,
            },
        );
        if let Some(v) = out_value.as_mut() {
            *v = profile.value;
        }
        if let Some(e) = out_exploitability.as_mut() {
            *e = exploitability(&efg, &profile.strategy);
        }
        Ok(())
    })
}

/// Expected cost of the best response to a prior of `len` probabilities; null `prior` means
/// uniform.
///
/// # Safety
/// `game` must be a live handle; `prior` must be null or point to `len` readable doubles; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn sls_best_response(
    game: *const SlsGame,
    prior: *const f64,
    len: usize,
    out: *mut f64,
) -> SlsStatus {
    guard(|| {
        let g = &game_ref(game)?.game;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let n = g.oracle.domain().len();
        let prior = if prior.is_null() {
            Prior::uniform(n)
        } else {
            Prior::new(std::slice::from_raw_parts(prior, len).to_vec()).map_err(core)?
        };
        let (_, r) = backward_induction_br(&g.oracle, prior, g.variant.weighted).map_err(core)?;
        *out = r.expected_cost;
        Ok(())
    })
}

/// Plays one game against item `item` and writes the number of questions asked.
///
/// `policy` is one of `got`, `uot`, `even-split`, `random` or `br`.
///
/// # Safety
/// `game` must be a live handle, `policy` a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sls_play(
    game: *const SlsGame,
    policy: *const c_char,
    item: usize,
    seed: u64,
    out_questions: *mut usize,
) -> SlsStatus {
    guard(|| {
        let g = &game_ref(game)?.game;
        let out = out_questions.as_mut().ok_or_else(|| null("out_questions"))?;
        let policy = make_policy(read_str(policy, "policy")?, g)?;
        let mut rng = play_rng(seed, item, 0);
        let t = play_game(item, policy.as_ref(), &g.oracle, &g.variant, &mut rng).map_err(core)?;
        *out = t.questions;
        Ok(())
    })
}

/// Evaluates a policy on every item `repeats` times.
///
/// # Safety
/// `game` must be a live handle, `policy` a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sls_eval(
    game: *const SlsGame,
    policy: *const c_char,
    repeats: usize,
    seed: u64,
    out: *mut *mut SlsReport,
) -> SlsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let g = &game_ref(game)?.game;
        let policy = make_policy(read_str(policy, "policy")?, g)?;
        let report = eval_worst_case(policy.as_ref(), &g.oracle, &g.variant, repeats, seed).map_err(core)?;
        *out = Box::into_raw(Box::new(SlsReport { report }));
        Ok(())
    })
}

/// Worst-case mean length and its weighted counterpart. Either output may be null.
///
/// # Safety
/// `report` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn sls_report_worst(
    report: *const SlsReport,
    out_worst: *mut f64,
    out_weighted_worst: *mut f64,
) -> SlsStatus {
    guard(|| {
        let r = &report.as_ref().ok_or_else(|| null("report"))?.report;
        if let Some(w) = out_worst.as_mut() {
            *w = r.l_worst;
        }
        if let Some(w) = out_weighted_worst.as_mut() {
            *w = r.weighted_worst;
        }
        Ok(())
    })
}

/// Report as JSON. The string must be released with [`sls_string_free`].
///
/// # Safety
/// `report` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sls_report_json(report: *const SlsReport, out: *mut *mut c_char) -> SlsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let r = &report.as_ref().ok_or_else(|| null("report"))?.report;
        let json = r.to_json().map_err(core)?;
        let c = CString::new(json).map_err(|e| (SlsStatus::GameError, e.to_string()))?;
        *out = c.into_raw();
        Ok(())
    })
}

/// Releases a report. Null is ignored.
///
/// # Safety
/// `report` must be null or a handle from [`sls_eval`] that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn sls_report_free(report: *mut SlsReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn sls_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
