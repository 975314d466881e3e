//! C interface to `fluxcell`.
//!
//! Every fallible call returns a [`FluxcellStatus`]; on failure the message is
//! kept per thread and read with [`fluxcell_last_error_message`]. Handles are
//! opaque and released with their `_free` function. Buffers are passed as
//! pointer plus element count.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use fluxcell::crossbar::{CrossbarArray, MvmMode, PeripheryConfig, StateInit, StateMap, DEFAULT_WEIGHT_BOUND};
use fluxcell::device::{self, DeviceParams, DEFAULT_I_C0, DEFAULT_KAPPA, MEASURED_I_SW};
use fluxcell::etsim::{self, PulseTrain, SimOptions};
use fluxcell::nn::{Network, TrainConfig};
use fluxcell::rng::{self, streams, SimRng};
use fluxcell::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluxcellStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    InvalidInput = 3,
    DimensionMismatch = 4,
    InvalidState = 5,
    Parse = 6,
    Simulation = 7,
    Io = 8,
    Checkpoint = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

/// Crossbar array of the default device and periphery, with its own RNG.
pub struct FluxcellCrossbar {
    array: CrossbarArray,
    rng: SimRng,
}

/// Fully connected network with its training configuration and RNGs.
pub struct FluxcellNetwork {
    net: Network,
    cfg: TrainConfig,
    noise_rng: SimRng,
    update_rng: SimRng,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> FluxcellStatus {
    match e {
        Error::InvalidParameter { .. } => FluxcellStatus::InvalidParameter,
        Error::InvalidInput(_) => FluxcellStatus::InvalidInput,
        Error::DimensionMismatch { .. } => FluxcellStatus::DimensionMismatch,
        Error::InvalidState(_) => FluxcellStatus::InvalidState,
        Error::Parse { .. } | Error::Netlist { .. } | Error::Json(_) => FluxcellStatus::Parse,
        Error::Simulation { .. } => FluxcellStatus::Simulation,
        Error::Io(_) => FluxcellStatus::Io,
        Error::Checkpoint(_) => FluxcellStatus::Checkpoint,
    }
}

struct Fail(FluxcellStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(FluxcellStatus::NullPointer, format!("`{what}` is null"))
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> FluxcellStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            FluxcellStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            FluxcellStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn path<'a>(p: *const c_char) -> Result<&'a Path, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(FluxcellStatus::InvalidInput, "path is not valid UTF-8".into()))?;
    Ok(Path::new(s))
}

fn copy_into(src: &[f64], dst: &mut [f64]) -> Result<(), Fail> {
    if dst.len() != src.len() {
        return Err(Fail(
            FluxcellStatus::DimensionMismatch,
            format!("output buffer holds {} values, need {}", dst.len(), src.len()),
        ));
    }
    dst.copy_from_slice(src);
    Ok(())
}

fn mode(analog: bool) -> MvmMode {
    if analog {
        MvmMode::Analog
    } else {
        MvmMode::Ideal
    }
}

fn device_with_states(states: u64) -> Result<DeviceParams, Fail> {
    Ok(DeviceParams::with_num_states(MEASURED_I_SW, states, DEFAULT_I_C0, DEFAULT_KAPPA)?)
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fluxcell_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Bytes needed to hold the last error message including the NUL, or 0 if
/// the last call on this thread succeeded.
#[no_mangle]
pub extern "C" fn fluxcell_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(0, |c| c.as_bytes_with_nul().len()))
}

/// Copies the last error message into `buf`, truncating to fit. Returns the
/// number of bytes written excluding the NUL, or -1 if there is no error or
/// `buf` is null or empty.
///
/// # Safety
/// `buf` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn fluxcell_last_error_message(buf: *mut c_char, len: usize) -> isize {
    if buf.is_null() || len == 0 {
        return -1;
    }
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => -1,
        Some(c) => {
            let bytes = c.as_bytes();
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
            n as isize
        }
    })
}

/// # Safety
/// `out_states` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fluxcell_num_states(i_sw: f64, l_loop: f64, out_states: *mut u64) -> FluxcellStatus {
    guard(|| {
        *out(out_states, "out_states")? = device::num_states(i_sw, l_loop)?;
        Ok(())
    })
}

/// # Safety
/// `out_amps` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fluxcell_delta_i(l_loop: f64, out_amps: *mut f64) -> FluxcellStatus {
    guard(|| {
        *out(out_amps, "out_amps")? = device::delta_i(l_loop)?;
        Ok(())
    })
}

/// Kinetic inductance per square (H) from sheet resistance (Ω/□) and critical
/// temperature (K).
///
/// # Safety
/// `out_henry` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fluxcell_kinetic_inductance_per_square(
    r_sheet: f64,
    t_c: f64,
    out_henry: *mut f64,
) -> FluxcellStatus {
    guard(|| {
        *out(out_henry, "out_henry")? = device::kinetic_inductance_per_square(r_sheet, t_c)?;
        Ok(())
    })
}

/// Runs the bundled unit-cell circuit with `up` positive then `down` negative
/// programming pulses and writes the `up + down + 1` quantized levels.
///
/// # Safety
/// `levels` must point to `capacity` writable values; `out_written` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fluxcell_unit_cell_staircase(
    up: usize,
    down: usize,
    levels: *mut i64,
    capacity: usize,
    out_written: *mut usize,
) -> FluxcellStatus {
    guard(|| {
        let written = out(out_written, "out_written")?;
        let need = up + down + 1;
        let buf = slice_mut(levels, capacity, "levels")?;
        if capacity < need {
            return Err(Fail(FluxcellStatus::BufferTooSmall, format!("need {need} levels, have {capacity}")));
        }
        let net = etsim::parse(etsim::UNIT_CELL_NETLIST)?;
        let train = PulseTrain::up_down("vprog", "cell", 0.75, up, down);
        let r = etsim::staircase_experiment(&net, &train, SimOptions::default())?;
        let lv = r.levels();
        buf[..lv.len()].copy_from_slice(&lv);
        *written = lv.len();
        Ok(())
    })
}

/// New `rows x cols` crossbar of `states`-state cells with the default
/// periphery, states drawn from the central half of the range.
///
/// # Safety
/// `out_handle` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fluxcell_crossbar_new(
    rows: usize,
    cols: usize,
    states: u64,
    seed: u64,
    out_handle: *mut *mut FluxcellCrossbar,
) -> FluxcellStatus {
    guard(|| {
        let slot = out(out_handle, "out_handle")?;
        *slot = ptr::null_mut();
        let map = StateMap::with_weight_bound(device_with_states(states)?, 0, DEFAULT_WEIGHT_BOUND)?;
        let mut init_rng = rng::stream(seed, streams::INIT);
        let array =
            CrossbarArray::with_map(rows, cols, map, PeripheryConfig::default(), StateInit::CentralHalf, &mut init_rng)?;
        *slot = Box::into_raw(Box::new(FluxcellCrossbar { array, rng: rng::stream(seed, streams::UPDATE) }));
        Ok(())
    })
}

/// Loads a crossbar checkpoint file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out_handle` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fluxcell_crossbar_load(
    file: *const c_char,
    seed: u64,
    out_handle: *mut *mut FluxcellCrossbar,
) -> FluxcellStatus {
    guard(|| {
        let slot = out(out_handle, "out_handle")?;
        *slot = ptr::null_mut();
        let array = CrossbarArray::load(path(file)?)?;
        *slot = Box::into_raw(Box::new(FluxcellCrossbar { array, rng: rng::stream(seed, streams::UPDATE) }));
        Ok(())
    })
}

/// # Safety
/// `handle` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn fluxcell_crossbar_free(handle: *mut FluxcellCrossbar) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// # Safety
/// `handle` must be live; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn fluxcell_crossbar_save(handle: *const FluxcellCrossbar, file: *const c_char) -> FluxcellStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        h.array.save(path(file)?)?;
        Ok(())
    })
}

/// # Safety
/// `handle` must be live; output pointers valid.
#[no_mangle]
pub unsafe extern "C" fn fluxcell_crossbar_shape(
    handle: *const FluxcellCrossbar,
    out_rows: *mut usize,
    out_cols: *mut usize,
) -> FluxcellStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        *out(out_rows, "out_rows")? = h.array.rows();
        *out(out_cols, "out_cols")? = h.array.cols();
        Ok(())
    })
}

/// Logical weights, row-major, `rows * cols` values.
///
/// # Safety
/// `handle` must be live; `weights` must point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn fluxcell_crossbar_weights(
    handle: *const FluxcellCrossbar,
    weights: *mut f64,
    len: usize,
) -> FluxcellStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        copy_into(h.array.weights(), slice_mut(weights, len, "weights")?)
    })
}

/// `y = W x` (`transpose == false`, `x` has `cols` values) or `y = W^T x`.
/// `analog` selects the periphery model over the exact product.
///
/// # Safety
/// `handle` must be live; `x` and `y` must hold `x_len` and `y_len` values.
#[no_mangle]
pub unsafe extern "C" fn fluxcell_crossbar_mvm(
    handle: *mut FluxcellCrossbar,
    x: *const f64,
    x_len: usize,
    transpose: bool,
    analog: bool,
    y: *mut f64,
    y_len: usize,
) -> FluxcellStatus {
    guard(|| {
        let h = handle.as_mut().ok_or_else(|| null("handle"))?;
        let x = slice(x, x_len, "x")?;
        let r = if transpose {
            h.array.backward(x, mode(analog), &mut h.rng)?
        } else {
            h.array.forward(x, mode(analog), &mut h.rng)?
        };
        copy_into(&r, slice_mut(y, y_len, "y")?)
    })
}

/// Stochastic coincidence update with inputs `x` (`cols`) and errors `d`
/// (`rows`); the expected weight change is `lr * d x^T`.
///
/// # Safety
/// `handle` must be live; `x` and `d` must hold `x_len` and `d_len` values.
#[no_mangle]
pub unsafe extern "C" fn fluxcell_crossbar_update(
    handle: *mut FluxcellCrossbar,
    x: *const f64,
    x_len: usize,
    d: *const f64,
    d_len: usize,
    lr: f64,
) -> FluxcellStatus {
    guard(|| {
        let h = handle.as_mut().ok_or_else(|| null("handle"))?;
        let plan = h.array.plan_update(slice(x, x_len, "x")?, slice(d, d_len, "d")?, lr)?;
        h.array.apply_update(&plan, &mut h.rng)?;
        Ok(())
    })
}

/// New network over `layers` (input size first). `states == 0` builds the
/// floating-point baseline, otherwise crossbar tiles of `states`-state cells.
///
/// # Safety
/// `layers` must hold `n_layers` values; `out_handle` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fluxcell_network_new(
    layers: *const usize,
    n_layers: usize,
    states: u64,
    lr: f64,
    seed: u64,
    out_handle: *mut *mut FluxcellNetwork,
) -> FluxcellStatus {
    guard(|| {
        let slot = out(out_handle, "out_handle")?;
        *slot = ptr::null_mut();
        let cfg = TrainConfig {
            layers: slice(layers, n_layers, "layers")?.to_vec(),
            lr,
            seed,
            states: if states == 0 { 2 } else { states },
            ..TrainConfig::default()
        };
        let mut init_rng = rng::stream(seed, streams::INIT);
        let net = if states == 0 {
            Network::float(&cfg, &mut init_rng)?
        } else {
            Network::crossbar(&cfg, &mut init_rng)?
        };
        *slot = Box::into_raw(Box::new(FluxcellNetwork {
            net,
            noise_rng: rng::stream(seed, streams::FORWARD_NOISE),
            update_rng: rng::stream(seed, streams::UPDATE),
            cfg,
        }));
        Ok(())
    })
}

/// # Safety
/// `handle` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn fluxcell_network_free(handle: *mut FluxcellNetwork) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// One SGD step; writes the sample's loss before the update.
///
/// # Safety
/// `handle` must be live; `input` must hold `len` values; `out_loss` valid or null.
#[no_mangle]
pub unsafe extern "C" fn fluxcell_network_train_step(
    handle: *mut FluxcellNetwork,
    input: *const f64,
    len: usize,
    label: usize,
    out_loss: *mut f64,
) -> FluxcellStatus {
    guard(|| {
        let h = handle.as_mut().ok_or_else(|| null("handle"))?;
        let loss = h.net.train_step(slice(input, len, "input")?, label, &h.cfg, &mut h.noise_rng, &mut h.update_rng)?;
        if let Some(l) = out_loss.as_mut() {
            *l = loss;
        }
        Ok(())
    })
}

/// Class probabilities of one input.
///
/// # Safety
/// `handle` must be live; `input` and `probs` must hold `len` and `probs_len` values.
#[no_mangle]
pub unsafe extern "C" fn fluxcell_network_forward(
    handle: *mut FluxcellNetwork,
    input: *const f64,
    len: usize,
    analog: bool,
    probs: *mut f64,
    probs_len: usize,
) -> FluxcellStatus {
    guard(|| {
        let h = handle.as_mut().ok_or_else(|| null("handle"))?;
        let p = h.net.forward_pass(slice(input, len, "input")?, mode(analog), &mut h.noise_rng)?;
        copy_into(&p, slice_mut(probs, probs_len, "probs")?)
    })
}

/// Saves the network into directory `dir`.
///
/// # Safety
/// `handle` must be live; `dir` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn fluxcell_network_save(handle: *const FluxcellNetwork, dir: *const c_char) -> FluxcellStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        h.net.save(path(dir)?)?;
        Ok(())
    })
}
