//! C ABI over the `lisec` library.
//!
//! Every function returns a `LisecStatus` (0 on success) and writes results
//! through out-pointers. On failure the message is kept per thread and can be
//! read with [`lisec_last_error`]. Handles are opaque and must be released
//! with their matching `_free` function. Pointer arguments must be null or
//! valid for the access described on each function; handles must come from
//! this library and not be used after they are freed.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use lisec::cli::{run_experiment, run_one, write_outputs, Arm, Scenario};
use lisec::messages::{decode_dao, encode_dao, DaoModified};
use lisec::puf_auth::{
    generate_license, recover_response, Challenge, CrDatabase, CrPair, License, PufDevice, PufError, Response, Width,
};
use lisec::{Address, NodeId};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type LisecStatus = i32;

pub const LISEC_OK: LisecStatus = 0;
pub const LISEC_ERR_NULL: LisecStatus = 1;
pub const LISEC_ERR_INVALID: LisecStatus = 2;
pub const LISEC_ERR_DECODE: LisecStatus = 3;
pub const LISEC_ERR_DUPLICATE: LisecStatus = 4;
pub const LISEC_ERR_CAPACITY: LisecStatus = 5;
pub const LISEC_ERR_BUFFER_TOO_SMALL: LisecStatus = 6;
pub const LISEC_ERR_SIMULATION: LisecStatus = 7;
pub const LISEC_ERR_IO: LisecStatus = 8;
pub const LISEC_ERR_PANIC: LisecStatus = 99;

pub const LISEC_ADDRESS_LEN: usize = 16;
pub const LISEC_SECRET_LEN: usize = 16;

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

struct Failure(LisecStatus, String);

impl Failure {
    fn null(what: &str) -> Self {
        Failure(LISEC_ERR_NULL, format!("{what} is null"))
    }

    fn invalid(msg: impl ToString) -> Self {
        Failure(LISEC_ERR_INVALID, msg.to_string())
    }
}

impl From<PufError> for Failure {
    fn from(e: PufError) -> Self {
        let code = match e {
            PufError::AlreadyRegistered(_) => LISEC_ERR_DUPLICATE,
            PufError::CapacityExceeded(_) => LISEC_ERR_CAPACITY,
            PufError::Decode(_) => LISEC_ERR_DECODE,
            _ => LISEC_ERR_INVALID,
        };
        Failure(code, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LisecStatus {
    let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "unknown panic".into());
        Err(Failure(LISEC_ERR_PANIC, format!("panic: {msg}")))
    });
    match result {
        Ok(()) => {
            LAST_ERROR.with(|e| e.borrow_mut().clear());
            LISEC_OK
        }
        Err(Failure(code, msg)) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = msg);
            code
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure::invalid(format!("{what} is not UTF-8")))
}

unsafe fn bytes<'a>(p: *const u8, len: usize, what: &str) -> Result<&'a [u8], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn address(p: *const u8, what: &str) -> Result<Address, Failure> {
    let b = bytes(p, LISEC_ADDRESS_LEN, what)?;
    Ok(Address(b.try_into().expect("length checked")))
}

fn width(bits: u32) -> Result<Width, Failure> {
    Ok(Width::new(bits)?)
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to fit) and returns the full message length.
#[no_mangle]
pub unsafe extern "C" fn lisec_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lisec_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// `license = challenge XOR response` at the given width in bits.
#[no_mangle]
pub unsafe extern "C" fn lisec_generate_license(
    challenge: u64,
    response: u64,
    width_bits: u32,
    license_out: *mut u64,
) -> LisecStatus {
    guard(|| {
        let w = width(width_bits)?;
        let l = generate_license(Challenge::new(challenge, w)?, Response::new(response, w)?);
        *out(license_out, "license_out")? = l.value();
        Ok(())
    })
}

/// `response = challenge XOR license` at the given width in bits.
#[no_mangle]
pub unsafe extern "C" fn lisec_recover_response(
    challenge: u64,
    license: u64,
    width_bits: u32,
    response_out: *mut u64,
) -> LisecStatus {
    guard(|| {
        let w = width(width_bits)?;
        let r = recover_response(Challenge::new(challenge, w)?, License::new(license, w)?);
        *out(response_out, "response_out")? = r.value();
        Ok(())
    })
}

/// Challenge-response database held by the border router.
pub struct LisecCrDatabase {
    db: CrDatabase,
}

#[no_mangle]
pub unsafe extern "C" fn lisec_db_new(
    capacity: usize,
    width_bits: u32,
    db_out: *mut *mut LisecCrDatabase,
) -> LisecStatus {
    guard(|| {
        let slot = out(db_out, "db_out")?;
        let db = CrDatabase::new(capacity, width(width_bits)?);
        *slot = Box::into_raw(Box::new(LisecCrDatabase { db }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn lisec_db_free(db: *mut LisecCrDatabase) {
    if !db.is_null() {
        drop(Box::from_raw(db));
    }
}

#[no_mangle]
pub unsafe extern "C" fn lisec_db_len(db: *const LisecCrDatabase) -> usize {
    db.as_ref().map_or(0, |d| d.db.len())
}

/// Registers `node_id` with a keyed PUF built from the 16-byte `secret`;
/// the challenge is drawn from a generator seeded with `seed`.
#[no_mangle]
pub unsafe extern "C" fn lisec_db_register_keyed(
    db: *mut LisecCrDatabase,
    node_id: u16,
    secret: *const u8,
    seed: u64,
    challenge_out: *mut u64,
    license_out: *mut u64,
) -> LisecStatus {
    guard(|| {
        let d = out(db, "db")?;
        let secret: [u8; LISEC_SECRET_LEN] =
            bytes(secret, LISEC_SECRET_LEN, "secret")?.try_into().expect("length checked");
        let ch_out = out(challenge_out, "challenge_out")?;
        let l_out = out(license_out, "license_out")?;
        let device = PufDevice::keyed(NodeId(node_id), d.db.width(), secret);
        let (ch, l) = d.db.register_node(NodeId(node_id), &device, &mut ChaCha8Rng::seed_from_u64(seed))?;
        *ch_out = ch.value();
        *l_out = l.value();
        Ok(())
    })
}

/// Stores an externally provisioned pair.
#[no_mangle]
pub unsafe extern "C" fn lisec_db_insert(
    db: *mut LisecCrDatabase,
    node_id: u16,
    challenge: u64,
    response: u64,
) -> LisecStatus {
    guard(|| {
        let d = out(db, "db")?;
        let w = d.db.width();
        let pair = CrPair { challenge: Challenge::new(challenge, w)?, response: Response::new(response, w)? };
        d.db.insert(NodeId(node_id), pair)?;
        Ok(())
    })
}

/// Sets `*accepted` to whether `license` authenticates `node_id`.
#[no_mangle]
pub unsafe extern "C" fn lisec_db_verify(
    db: *const LisecCrDatabase,
    node_id: u16,
    license: u64,
    accepted: *mut bool,
) -> LisecStatus {
    guard(|| {
        let d = db.as_ref().ok_or_else(|| Failure::null("db"))?;
        let acc = out(accepted, "accepted")?;
        let l = License::new(license, d.db.width())?;
        *acc = d.db.verify_license(NodeId(node_id), l).is_accept();
        Ok(())
    })
}

/// Fixed part of a decoded DAO.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LisecDao {
    pub src: [u8; LISEC_ADDRESS_LEN],
    pub target: [u8; LISEC_ADDRESS_LEN],
    pub sequence: u8,
    pub reserved: u8,
    pub options_len: usize,
}

/// Encodes a DAO into `buf`. `*written` receives the frame length; when the
/// buffer is too small nothing is written and the call fails with
/// `LISEC_ERR_BUFFER_TOO_SMALL`.
#[no_mangle]
pub unsafe extern "C" fn lisec_dao_encode(
    src: *const u8,
    target: *const u8,
    sequence: u8,
    reserved: u8,
    options: *const u8,
    options_len: usize,
    buf: *mut u8,
    buf_len: usize,
    written: *mut usize,
) -> LisecStatus {
    guard(|| {
        let written = out(written, "written")?;
        let dao = DaoModified {
            src: address(src, "src")?,
            target: address(target, "target")?,
            sequence,
            reserved: License::from_u8(reserved),
            options: bytes(options, options_len, "options")?.to_vec(),
        };
        let frame = encode_dao(&dao).map_err(Failure::invalid)?;
        *written = frame.len();
        if frame.len() > buf_len {
            return Err(Failure(LISEC_ERR_BUFFER_TOO_SMALL, format!("need {} bytes, have {buf_len}", frame.len())));
        }
        if buf.is_null() {
            return Err(Failure::null("buf"));
        }
        ptr::copy_nonoverlapping(frame.as_ptr(), buf, frame.len());
        Ok(())
    })
}

/// Decodes a DAO frame. Options are copied into `options` when it is large
/// enough; `dao->options_len` always reports their length.
#[no_mangle]
pub unsafe extern "C" fn lisec_dao_decode(
    frame: *const u8,
    frame_len: usize,
    dao_out: *mut LisecDao,
    options: *mut u8,
    options_cap: usize,
) -> LisecStatus {
    guard(|| {
        let slot = out(dao_out, "dao_out")?;
        let dao =
            decode_dao(bytes(frame, frame_len, "frame")?).map_err(|e| Failure(LISEC_ERR_DECODE, e.to_string()))?;
        *slot = LisecDao {
            src: dao.src.0,
            target: dao.target.0,
            sequence: dao.sequence,
            reserved: dao.reserved.value() as u8,
            options_len: dao.options.len(),
        };
        if dao.options.is_empty() {
            return Ok(());
        }
        if options.is_null() || options_cap < dao.options.len() {
            return Err(Failure(
                LISEC_ERR_BUFFER_TOO_SMALL,
                format!("options need {} bytes, have {options_cap}", dao.options.len()),
            ));
        }
        ptr::copy_nonoverlapping(dao.options.as_ptr(), options, dao.options.len());
        Ok(())
    })
}

/// Experiment configuration.
pub struct LisecScenario {
    scenario: Scenario,
}

/// New scenario with every key at its default.
#[no_mangle]
pub unsafe extern "C" fn lisec_scenario_new(scenario_out: *mut *mut LisecScenario) -> LisecStatus {
    guard(|| {
        *out(scenario_out, "scenario_out")? = Box::into_raw(Box::new(LisecScenario { scenario: Scenario::default() }));
        Ok(())
    })
}

/// Parses a key=value scenario file.
#[no_mangle]
pub unsafe extern "C" fn lisec_scenario_load(
    path: *const c_char,
    scenario_out: *mut *mut LisecScenario,
) -> LisecStatus {
    guard(|| {
        let slot = out(scenario_out, "scenario_out")?;
        let path = text(path, "path")?;
        let scenario = Scenario::load(Path::new(path)).map_err(Failure::invalid)?;
        *slot = Box::into_raw(Box::new(LisecScenario { scenario }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn lisec_scenario_free(s: *mut LisecScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Sets one scenario key, e.g. `("rt_cap", "8")`.
#[no_mangle]
pub unsafe extern "C" fn lisec_scenario_set(
    s: *mut LisecScenario,
    key: *const c_char,
    value: *const c_char,
) -> LisecStatus {
    guard(|| {
        let s = out(s, "scenario")?;
        let (key, value) = (text(key, "key")?, text(value, "value")?);
        s.scenario.set(key, value).map_err(Failure::invalid)?;
        Ok(())
    })
}

/// Per-run results. `ae2ed_s` is NaN when nothing was delivered.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LisecRunMetrics {
    pub pdr: f64,
    pub ae2ed_s: f64,
    pub apc_mw: f64,
    pub n_blacklist: u64,
    pub rt_peak: u64,
    pub sent: u64,
    pub received: u64,
    pub forged_emitted: u64,
}

/// Runs one arm (`baseline`, `attack`, `defense`, `defense_encrypted`) for
/// one seed.
#[no_mangle]
pub unsafe extern "C" fn lisec_run(
    s: *const LisecScenario,
    arm: *const c_char,
    seed: u64,
    metrics_out: *mut LisecRunMetrics,
) -> LisecStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| Failure::null("scenario"))?;
        let slot = out(metrics_out, "metrics_out")?;
        let arm: Arm = text(arm, "arm")?.parse().map_err(Failure::invalid)?;
        s.scenario.validate().map_err(Failure::invalid)?;
        let r = run_one(&s.scenario, arm, seed).map_err(|e| Failure(LISEC_ERR_SIMULATION, e.to_string()))?;
        *slot = LisecRunMetrics {
            pdr: r.metrics.pdr,
            ae2ed_s: r.metrics.ae2ed_s.unwrap_or(f64::NAN),
            apc_mw: r.metrics.apc_mw,
            n_blacklist: r.metrics.n_blacklist,
            rt_peak: r.metrics.rt_peak as u64,
            sent: r.counters.total_sent(),
            received: r.counters.received_at_root,
            forged_emitted: r.counters.forged_emitted,
        };
        Ok(())
    })
}

/// Runs every arm and seed of the scenario and writes `runs.csv`,
/// `summary.csv` and any traces into `out_dir`.
#[no_mangle]
pub unsafe extern "C" fn lisec_run_experiment(
    s: *const LisecScenario,
    seed_base: u64,
    out_dir: *const c_char,
) -> LisecStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| Failure::null("scenario"))?;
        let dir = text(out_dir, "out_dir")?;
        s.scenario.validate().map_err(Failure::invalid)?;
        let report =
            run_experiment(&s.scenario, seed_base).map_err(|e| Failure(LISEC_ERR_SIMULATION, e.to_string()))?;
        write_outputs(&report, Path::new(dir)).map_err(|e| Failure(LISEC_ERR_IO, e.to_string()))?;
        Ok(())
    })
}
