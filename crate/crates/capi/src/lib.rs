//! C ABI for the neurocap library.
//!
//! Scalar operations take plain buffers and write through out-pointers;
//! capacity solves return an opaque `NeurocapSolution` handle that must be
//! released with [`neurocap_solution_free`]. Every function returns a
//! [`NeurocapStatus`]; on failure a human-readable message is kept in
//! thread-local storage and can be fetched with
//! [`neurocap_last_error_message`].
//!
//! The generated header lives at `include/neurocap.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use neurocap::io::SolutionDocument;
use neurocap::{
    CapacitySolution, ChannelMatrix, CountChannelConfig, DiscretePmf, GammaChannel, JointPmf,
    NeuronChannel, SolverOptions,
};

/// Status codes returned by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeurocapStatus {
    NeurocapOk = 0,
    NeurocapNullPointer = 1,
    NeurocapInvalidArgument = 2,
    NeurocapNumericalError = 3,
    NeurocapInternalError = 4,
}

/// Output conventions for [`neurocap_capacity_solve`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeurocapCoding {
    NeurocapTemporal = 0,
    NeurocapRate = 1,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn fail(err: neurocap::Error) -> NeurocapStatus {
    set_error(&err.to_string());
    if err.is_numerical() {
        NeurocapStatus::NeurocapNumericalError
    } else {
        NeurocapStatus::NeurocapInvalidArgument
    }
}

/// Message for the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread; do not free it.
#[no_mangle]
pub extern "C" fn neurocap_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

fn guarded<F: FnOnce() -> NeurocapStatus>(body: F) -> NeurocapStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            NeurocapStatus::NeurocapInternalError
        }
    }
}

/// # Safety
/// `ptr` must point to `len` readable doubles (or be non-null with len 0).
unsafe fn slice_arg<'a>(ptr: *const f64, len: usize) -> Option<&'a [f64]> {
    if ptr.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(ptr, len))
    }
}

macro_rules! out_ptr {
    ($ptr:expr) => {
        match $ptr.is_null() {
            true => {
                set_error("output pointer is null");
                return NeurocapStatus::NeurocapNullPointer;
            }
            false => &mut *$ptr,
        }
    };
}

// ---------------------------------------------------------------------------
// Finite-alphabet primitives.
// ---------------------------------------------------------------------------

/// Entropy of a probability vector, bits.
///
/// # Safety
/// `probs` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn neurocap_entropy(
    probs: *const f64,
    len: usize,
    out: *mut f64,
) -> NeurocapStatus {
    guarded(|| {
        let out = out_ptr!(out);
        let Some(probs) = slice_arg(probs, len) else {
            set_error("probs pointer is null");
            return NeurocapStatus::NeurocapNullPointer;
        };
        match DiscretePmf::from_probs(probs.to_vec()) {
            Ok(pmf) => {
                *out = neurocap::entropy(&pmf);
                NeurocapStatus::NeurocapOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Binary entropy H(theta), bits.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn neurocap_binary_entropy(theta: f64, out: *mut f64) -> NeurocapStatus {
    guarded(|| {
        let out = out_ptr!(out);
        match neurocap::binary_entropy(theta) {
            Ok(h) => {
                *out = h;
                NeurocapStatus::NeurocapOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Binary symmetric channel capacity 1 - H(p), bits per use.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn neurocap_bsc_capacity(p: f64, out: *mut f64) -> NeurocapStatus {
    guarded(|| {
        let out = out_ptr!(out);
        match neurocap::bsc_capacity(p) {
            Ok(c) => {
                *out = c;
                NeurocapStatus::NeurocapOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Kullback-Leibler divergence D(p||q) in bits. A support violation yields
/// +infinity with an OK status: it is a value, not an error.
///
/// # Safety
/// `p` and `q` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn neurocap_kl_divergence(
    p: *const f64,
    q: *const f64,
    len: usize,
    out: *mut f64,
) -> NeurocapStatus {
    guarded(|| {
        let out = out_ptr!(out);
        let (Some(p), Some(q)) = (slice_arg(p, len), slice_arg(q, len)) else {
            set_error("input pointer is null");
            return NeurocapStatus::NeurocapNullPointer;
        };
        let build = DiscretePmf::from_probs(p.to_vec())
            .and_then(|p| DiscretePmf::from_probs(q.to_vec()).map(|q| (p, q)));
        match build.and_then(|(p, q)| neurocap::kl_divergence(&p, &q)) {
            Ok(d) => {
                *out = d;
                NeurocapStatus::NeurocapOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Mutual information of a joint distribution given row-major as
/// `rows x cols` doubles, bits.
///
/// # Safety
/// `joint` must point to `rows*cols` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn neurocap_mutual_information(
    joint: *const f64,
    rows: usize,
    cols: usize,
    out: *mut f64,
) -> NeurocapStatus {
    guarded(|| {
        let out = out_ptr!(out);
        let Some(flat) = slice_arg(joint, rows.saturating_mul(cols)) else {
            set_error("joint pointer is null");
            return NeurocapStatus::NeurocapNullPointer;
        };
        let matrix: Vec<Vec<f64>> = flat.chunks(cols.max(1)).map(|c| c.to_vec()).collect();
        let row_labels: Vec<String> = (0..rows).map(|i| i.to_string()).collect();
        let col_labels: Vec<String> = (0..cols).map(|j| j.to_string()).collect();
        match JointPmf::new(row_labels, col_labels, matrix) {
            Ok(joint) => {
                *out = neurocap::mutual_information(&joint);
                NeurocapStatus::NeurocapOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Blahut-Arimoto capacity of a discrete channel given row-major as
/// `n_inputs x n_outputs` conditional probabilities. Writes the capacity in
/// bits and, when `out_input` is non-null, the optimal input distribution
/// (`n_inputs` doubles).
///
/// # Safety
/// `rows` must point to `n_inputs*n_outputs` doubles; `out_capacity` must be
/// writable; `out_input`, when non-null, must hold `n_inputs` doubles.
#[no_mangle]
pub unsafe extern "C" fn neurocap_blahut_arimoto(
    rows: *const f64,
    n_inputs: usize,
    n_outputs: usize,
    tol: f64,
    max_iter: usize,
    out_capacity: *mut f64,
    out_input: *mut f64,
) -> NeurocapStatus {
    guarded(|| {
        let out_capacity = out_ptr!(out_capacity);
        let Some(flat) = slice_arg(rows, n_inputs.saturating_mul(n_outputs)) else {
            set_error("rows pointer is null");
            return NeurocapStatus::NeurocapNullPointer;
        };
        let matrix: Vec<Vec<f64>> = flat.chunks(n_outputs.max(1)).map(|c| c.to_vec()).collect();
        let input_labels: Vec<String> = (0..n_inputs).map(|i| i.to_string()).collect();
        let output_labels: Vec<String> = (0..n_outputs).map(|j| j.to_string()).collect();
        let channel = match ChannelMatrix::new(input_labels, output_labels, matrix) {
            Ok(ch) => ch,
            Err(e) => return fail(e),
        };
        match neurocap::blahut_arimoto(&channel, tol, max_iter) {
            Ok((capacity, input)) => {
                *out_capacity = capacity;
                if !out_input.is_null() {
                    std::ptr::copy_nonoverlapping(input.probs().as_ptr(), out_input, n_inputs);
                }
                NeurocapStatus::NeurocapOk
            }
            Err(e) => fail(e),
        }
    })
}

// ---------------------------------------------------------------------------
// Gamma ISI channel scalars.
// ---------------------------------------------------------------------------

/// Natural-log conditional ISI density ln p(t|theta) for the gamma channel.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn neurocap_isi_log_density(
    kappa: f64,
    a0: f64,
    b0: f64,
    t: f64,
    theta: f64,
    out: *mut f64,
) -> NeurocapStatus {
    guarded(|| {
        let out = out_ptr!(out);
        match GammaChannel::new(kappa, a0, b0).and_then(|ch| ch.isi_log_density(t, theta)) {
            Ok(v) => {
                *out = v;
                NeurocapStatus::NeurocapOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Spike-count probability P(R = r | theta) over a window of `delta` seconds.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn neurocap_count_pmf(
    kappa: f64,
    a0: f64,
    b0: f64,
    delta: f64,
    r: usize,
    theta: f64,
    out: *mut f64,
) -> NeurocapStatus {
    guarded(|| {
        let out = out_ptr!(out);
        let result = GammaChannel::new(kappa, a0, b0)
            .and_then(|ch| CountChannelConfig::new(ch, delta, 1e-12))
            .and_then(|cfg| cfg.count_pmf(r, theta));
        match result {
            Ok(v) => {
                *out = v;
                NeurocapStatus::NeurocapOk
            }
            Err(e) => fail(e),
        }
    })
}

// ---------------------------------------------------------------------------
// Capacity solutions behind an opaque handle.
// ---------------------------------------------------------------------------

/// Opaque capacity solution. Obtain with [`neurocap_capacity_solve`], release
/// with [`neurocap_solution_free`].
pub struct NeurocapSolution {
    inner: CapacitySolution,
}

/// Solves for the capacity and capacity-achieving ensemble of the gamma ISI
/// channel. `delta` is ignored for temporal coding. `tol` is the certificate
/// slack in bits; pass 0 for the default 1e-4.
///
/// # Safety
/// `out` must be a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn neurocap_capacity_solve(
    coding: NeurocapCoding,
    kappa: f64,
    a0: f64,
    b0: f64,
    delta: f64,
    tol: f64,
    out: *mut *mut NeurocapSolution,
) -> NeurocapStatus {
    guarded(|| {
        if out.is_null() {
            set_error("output handle pointer is null");
            return NeurocapStatus::NeurocapNullPointer;
        }
        let channel = match GammaChannel::new(kappa, a0, b0).and_then(|gamma| {
            Ok(match coding {
                NeurocapCoding::NeurocapTemporal => NeuronChannel::temporal(gamma),
                NeurocapCoding::NeurocapRate => {
                    NeuronChannel::rate(CountChannelConfig::new(gamma, delta, 1e-12)?)
                }
            })
        }) {
            Ok(ch) => ch,
            Err(e) => return fail(e),
        };
        let opts = if tol > 0.0 {
            SolverOptions::default().with_tol(tol)
        } else {
            SolverOptions::default()
        };
        match neurocap::particle_capacity(&channel, None, &opts) {
            Ok(solution) => {
                let handle = Box::new(NeurocapSolution { inner: solution });
                *out = Box::into_raw(handle);
                NeurocapStatus::NeurocapOk
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `handle` must come from [`neurocap_capacity_solve`] and not be freed yet.
unsafe fn solution_ref<'a>(handle: *const NeurocapSolution) -> Option<&'a CapacitySolution> {
    if handle.is_null() {
        None
    } else {
        Some(&(*handle).inner)
    }
}

/// Number of support points of a solution.
///
/// # Safety
/// `handle` must be a live solution handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn neurocap_solution_support_len(
    handle: *const NeurocapSolution,
    out: *mut usize,
) -> NeurocapStatus {
    guarded(|| {
        let out = out_ptr!(out);
        match solution_ref(handle) {
            Some(solution) => {
                *out = solution.ensemble.len();
                NeurocapStatus::NeurocapOk
            }
            None => {
                set_error("solution handle is null");
                NeurocapStatus::NeurocapNullPointer
            }
        }
    })
}

/// Capacity in bits per channel use and bits per second.
///
/// # Safety
/// `handle` must be a live solution handle; out pointers, when non-null,
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn neurocap_solution_capacity(
    handle: *const NeurocapSolution,
    out_per_use: *mut f64,
    out_bps: *mut f64,
) -> NeurocapStatus {
    guarded(|| match solution_ref(handle) {
        Some(solution) => {
            if !out_per_use.is_null() {
                *out_per_use = solution.capacity_per_use;
            }
            if !out_bps.is_null() {
                *out_bps = solution.capacity_bps;
            }
            NeurocapStatus::NeurocapOk
        }
        None => {
            set_error("solution handle is null");
            NeurocapStatus::NeurocapNullPointer
        }
    })
}

/// Whether the KKT certificate passed.
///
/// # Safety
/// `handle` must be a live solution handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn neurocap_solution_certified(
    handle: *const NeurocapSolution,
    out: *mut bool,
) -> NeurocapStatus {
    guarded(|| {
        let out = out_ptr!(out);
        match solution_ref(handle) {
            Some(solution) => {
                *out = solution.certificate.passed;
                NeurocapStatus::NeurocapOk
            }
            None => {
                set_error("solution handle is null");
                NeurocapStatus::NeurocapNullPointer
            }
        }
    })
}

/// Copies the support points and weights into caller buffers of capacity
/// `cap` each; writes the number of entries copied.
///
/// # Safety
/// `handle` must be a live solution handle; `points` and `weights`, when
/// non-null, must hold `cap` doubles; `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn neurocap_solution_support(
    handle: *const NeurocapSolution,
    points: *mut f64,
    weights: *mut f64,
    cap: usize,
    written: *mut usize,
) -> NeurocapStatus {
    guarded(|| {
        let written = out_ptr!(written);
        match solution_ref(handle) {
            Some(solution) => {
                let n = solution.ensemble.len().min(cap);
                if !points.is_null() {
                    std::ptr::copy_nonoverlapping(solution.ensemble.points().as_ptr(), points, n);
                }
                if !weights.is_null() {
                    std::ptr::copy_nonoverlapping(solution.ensemble.weights().as_ptr(), weights, n);
                }
                *written = n;
                NeurocapStatus::NeurocapOk
            }
            None => {
                set_error("solution handle is null");
                NeurocapStatus::NeurocapNullPointer
            }
        }
    })
}

/// Serializes the solution to its JSON document form. Free the returned
/// string with [`neurocap_string_free`]. Returns null on failure.
///
/// # Safety
/// `handle` must be a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn neurocap_solution_to_json(handle: *const NeurocapSolution) -> *mut c_char {
    let Some(solution) = solution_ref(handle) else {
        set_error("solution handle is null");
        return std::ptr::null_mut();
    };
    let doc = SolutionDocument::from_solution(solution, None);
    match neurocap::io::to_json_string(&doc) {
        Ok(json) => CString::new(json)
            .map(CString::into_raw)
            .unwrap_or(std::ptr::null_mut()),
        Err(e) => {
            set_error(&e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Frees a string returned by [`neurocap_solution_to_json`].
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn neurocap_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Releases a solution handle.
///
/// # Safety
/// `handle` must come from [`neurocap_capacity_solve`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn neurocap_solution_free(handle: *mut NeurocapSolution) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_through_the_abi() {
        let probs = [0.5, 0.5];
        let mut h = 0.0;
        let status = unsafe { neurocap_entropy(probs.as_ptr(), 2, &mut h) };
        assert_eq!(status, NeurocapStatus::NeurocapOk);
        assert!((h - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_pmf_reports_a_message() {
        let probs = [0.5, 0.6];
        let mut h = 0.0;
        let status = unsafe { neurocap_entropy(probs.as_ptr(), 2, &mut h) };
        assert_eq!(status, NeurocapStatus::NeurocapInvalidArgument);
        let message = unsafe {
            std::ffi::CStr::from_ptr(neurocap_last_error_message())
                .to_string_lossy()
                .to_string()
        };
        assert!(message.contains("sum"), "{message}");
    }

    #[test]
    fn null_pointers_are_rejected() {
        let status = unsafe { neurocap_entropy(std::ptr::null(), 2, std::ptr::null_mut()) };
        assert_eq!(status, NeurocapStatus::NeurocapNullPointer);
        let mut h = 0.0;
        let status = unsafe { neurocap_entropy(std::ptr::null(), 2, &mut h) };
        assert_eq!(status, NeurocapStatus::NeurocapNullPointer);
    }

    #[test]
    fn kl_support_violation_is_infinite_and_ok() {
        let p = [0.5, 0.5];
        let q = [1.0, 0.0];
        let mut d = 0.0;
        let status = unsafe { neurocap_kl_divergence(p.as_ptr(), q.as_ptr(), 2, &mut d) };
        assert_eq!(status, NeurocapStatus::NeurocapOk);
        assert!(d.is_infinite());
    }

    #[test]
    fn bsc_matches_blahut_arimoto() {
        let mut c = 0.0;
        unsafe { neurocap_bsc_capacity(0.1, &mut c) };
        let rows = [0.9, 0.1, 0.1, 0.9];
        let mut ba = 0.0;
        let mut input = [0.0, 0.0];
        let status = unsafe {
            neurocap_blahut_arimoto(
                rows.as_ptr(),
                2,
                2,
                1e-9,
                100_000,
                &mut ba,
                input.as_mut_ptr(),
            )
        };
        assert_eq!(status, NeurocapStatus::NeurocapOk);
        assert!((ba - c).abs() < 1e-8);
        assert!((input[0] - 0.5).abs() < 1e-4);
    }
}

#[cfg(test)]
mod channel_tests {
    use super::*;

    #[test]
    fn isi_density_and_count_pmf_values() {
        // kappa = 2, theta = 1, t = 1: density e^{-1}, log density -1.
        let mut ln_f = 0.0;
        let status = unsafe { neurocap_isi_log_density(2.0, 0.5, 4.0, 1.0, 1.0, &mut ln_f) };
        assert_eq!(status, NeurocapStatus::NeurocapOk);
        assert!((ln_f + 1.0).abs() < 1e-12, "{ln_f}");

        // kappa = 1, delta/theta = 2, r = 0: e^{-2}.
        let mut p = 0.0;
        let status = unsafe { neurocap_count_pmf(1.0, 0.001, 0.1, 0.02, 0, 0.01, &mut p) };
        assert_eq!(status, NeurocapStatus::NeurocapOk);
        assert!((p - (-2.0f64).exp()).abs() < 1e-12, "{p}");

        // Domain violations surface as invalid arguments.
        let status = unsafe { neurocap_isi_log_density(2.0, 0.5, 4.0, -1.0, 1.0, &mut ln_f) };
        assert_eq!(status, NeurocapStatus::NeurocapInvalidArgument);
    }
}
