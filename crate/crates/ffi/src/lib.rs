//! C interface to `densmetric`.
//!
//! Sequences are opaque `DmSequence` handles created by
//! [`dm_sequence_parse`] and released with [`dm_sequence_free`]. Every
//! function returns a [`DmStatus`]; on failure a message is available from
//! [`dm_last_error`] on the same thread. Text results are written as
//! NUL-terminated strings into caller buffers.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use densmetric::density::{self, CheckpointGrid};
use densmetric::numeric::rational_from_u64;
use densmetric::seq::{self, BigIndex, BitSequence};
use densmetric::setspec::parse_spec;
use densmetric::tree;
use densmetric::Error;
use num_bigint::BigUint;
use num_traits::ToPrimitive;

/// Bumped on any incompatible change to the functions or types below.
pub const DM_ABI_VERSION: u32 = 1;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Budget = 4,
    Range = 5,
    IndexBeyond = 6,
    InvalidArgument = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Opaque handle to a sequence.
pub struct DmSequence {
    inner: BitSequence,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(message: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = message.into());
}

struct Failure(DmStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Budget { .. } => DmStatus::Budget,
            Error::RationalRange { .. } => DmStatus::Range,
            Error::IndexBeyond { .. } | Error::DepthCap { .. } => DmStatus::IndexBeyond,
            _ => DmStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            DmStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            DmStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(DmStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(DmStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a>(p: *const DmSequence) -> Result<&'a BitSequence, Failure> {
    p.as_ref()
        .map(|h| &h.inner)
        .ok_or_else(|| Failure(DmStatus::NullPointer, "sequence handle is null".into()))
}

fn index(text: &str) -> Result<BigIndex, Failure> {
    text.trim()
        .parse::<BigUint>()
        .map_err(|_| Failure(DmStatus::InvalidArgument, format!("bad index {text:?}")))
}

unsafe fn write_text(s: &str, buf: *mut c_char, len: usize) -> Result<(), Failure> {
    if buf.is_null() {
        return Err(Failure(
            DmStatus::NullPointer,
            "output buffer is null".into(),
        ));
    }
    if s.len() + 1 > len {
        return Err(Failure(
            DmStatus::BufferTooSmall,
            format!("need {} bytes, buffer holds {len}", s.len() + 1),
        ));
    }
    ptr::copy_nonoverlapping(s.as_ptr(), buf.cast::<u8>(), s.len());
    *buf.add(s.len()) = 0;
    Ok(())
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(
            DmStatus::NullPointer,
            "output pointer is null".into(),
        ));
    }
    *out = value;
    Ok(())
}

#[no_mangle]
pub extern "C" fn dm_abi_version() -> u32 {
    DM_ABI_VERSION
}

/// Copies the last error message of this thread into `buf`. Returns the
/// message length without the terminator, even when `buf` is too small.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn dm_last_error(buf: *mut c_char, len: usize) -> usize {
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

/// Parses a set expression such as `symdiff(cr:1/2, not(evens))`.
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dm_sequence_parse(
    spec: *const c_char,
    out: *mut *mut DmSequence,
) -> DmStatus {
    guard(|| {
        let spec = text(spec, "spec")?;
        let parsed = parse_spec(spec).map_err(|e| Failure(DmStatus::Parse, e.to_string()))?;
        let inner = parsed.build()?;
        write_out(out, Box::into_raw(Box::new(DmSequence { inner })))
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `seq` must come from [`dm_sequence_parse`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dm_sequence_free(seq: *mut DmSequence) {
    if !seq.is_null() {
        drop(Box::from_raw(seq));
    }
}

/// Bit at a decimal index of any size.
///
/// # Safety
/// `seq` must be a live handle, `index_decimal` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dm_sequence_bit(
    seq: *const DmSequence,
    index_decimal: *const c_char,
    out: *mut u8,
) -> DmStatus {
    guard(|| {
        let s = handle(seq)?;
        let n = index(text(index_decimal, "index")?)?;
        write_out(out, u8::from(s.evaluate(&n)?))
    })
}

/// Writes bits `0..n` as bytes 0/1 into `buf`, which holds `len` bytes.
///
/// # Safety
/// `seq` must be a live handle and `buf` point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn dm_sequence_prefix(
    seq: *const DmSequence,
    n: u64,
    buf: *mut u8,
    len: usize,
) -> DmStatus {
    guard(|| {
        let s = handle(seq)?;
        if buf.is_null() {
            return Err(Failure(
                DmStatus::NullPointer,
                "output buffer is null".into(),
            ));
        }
        if (len as u64) < n {
            return Err(Failure(
                DmStatus::BufferTooSmall,
                format!("need {n} bytes, buffer holds {len}"),
            ));
        }
        let bits = seq::prefix(s, &BigIndex::from(n), seq::DEFAULT_PREFIX_CAP)?;
        for (i, b) in bits.into_iter().enumerate() {
            *buf.add(i) = u8::from(b);
        }
        Ok(())
    })
}

/// `ρ_n` as an exact `p/q` string.
///
/// # Safety
/// `seq` must be a live handle, `n_decimal` NUL-terminated, `buf` hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn dm_sequence_rho(
    seq: *const DmSequence,
    n_decimal: *const c_char,
    buf: *mut c_char,
    len: usize,
) -> DmStatus {
    guard(|| {
        let s = handle(seq)?;
        let n = index(text(n_decimal, "n")?)?;
        let rho = density::rho_at(s, &n)?;
        write_text(&format!("{}/{}", rho.numer(), rho.denom()), buf, len)
    })
}

/// The δ surrogate between `a` and `b`: the largest `ρ_n(a △ b)` over
/// checkpoints `n ∈ [warmup, limit]` of the geometric grid with ratio 5/4.
/// Writes it exactly into `buf` and approximately into `approx` (may be null).
///
/// # Safety
/// Handles must be live, `buf` hold `len` bytes, `approx` be null or writable.
#[no_mangle]
pub unsafe extern "C" fn dm_delta(
    a: *const DmSequence,
    b: *const DmSequence,
    warmup: u64,
    limit: u64,
    buf: *mut c_char,
    len: usize,
    approx: *mut f64,
) -> DmStatus {
    guard(|| {
        let (sa, sb) = (handle(a)?, handle(b)?);
        let grid = CheckpointGrid::geometric(rational_from_u64(5, 4), warmup, limit)?;
        let (tail_max, _) = density::delta_estimate(sa, sb, &grid)?;
        write_text(
            &format!("{}/{}", tail_max.numer(), tail_max.denom()),
            buf,
            len,
        )?;
        if !approx.is_null() {
            *approx = tail_max.to_f64().unwrap_or(f64::NAN);
        }
        Ok(())
    })
}

/// Bit of the balanced-tree string selected by `directions` (a string of
/// `0`/`1`) at a decimal index below `l_{|directions|}`.
///
/// # Safety
/// Strings must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dm_tree_bit(
    directions: *const c_char,
    index_decimal: *const c_char,
    out: *mut u8,
) -> DmStatus {
    guard(|| {
        let dirs = seq::parse_bits(text(directions, "directions")?).ok_or_else(|| {
            Failure(
                DmStatus::InvalidArgument,
                "directions must be 0/1 digits".into(),
            )
        })?;
        let code = tree::TreeCode::new(&dirs)?;
        let m = index(text(index_decimal, "index")?)?;
        write_out(out, u8::from(code.bit(&m)?))
    })
}
