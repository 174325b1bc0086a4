use std::ffi::{CStr, CString};
use std::ptr;

use creadet_ffi::*;

fn last_error() -> String {
    let p = creadet_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn statistics_match_hand_values() {
    let r = [10.0, 10.0];
    let s = [0.0, 0.0 + 20.0];
    let mut l = 0.0;
    let mut g = 0.0;
    let mut chi2 = 0.0;
    let mut df = 0usize;
    unsafe {
        assert_eq!(creadet_two_way_lr(r.as_ptr(), s.as_ptr(), 2, &mut l), CreadetStatus::Ok);
        assert_eq!(creadet_g_two_way(r.as_ptr(), s.as_ptr(), 2, &mut g), CreadetStatus::Ok);
        assert_eq!(creadet_chi2_two_way(r.as_ptr(), s.as_ptr(), 2, &mut chi2), CreadetStatus::Ok);
        assert_eq!(creadet_degrees_of_freedom(r.as_ptr(), s.as_ptr(), 2, &mut df), CreadetStatus::Ok);
    }
    // Pooled (10, 30)/40. L = 10 ln(1/(1/4)) + 10 ln((1/2)/(3/4)) + 20 ln(1/(3/4)).
    let want = 10.0 * 2f64.ln() + 10.0 * (2.0f64 / 3.0).ln() + 20.0 * (4.0f64 / 3.0).ln();
    assert!((l - want).abs() < 1e-12, "{l} vs {want}");
    assert_eq!(g, 2.0 * l);
    // Expected r = (5, 15), s = (5, 15): χ² = 25/5 + 25/15 + 25/5 + 25/15.
    assert!((chi2 - (10.0 + 50.0 / 15.0)).abs() < 1e-12);
    assert_eq!(df, 2);

    let mut q = 0.0;
    unsafe { assert_eq!(creadet_chi2_survival(3.0, 2, &mut q), CreadetStatus::Ok) };
    assert!((q - (-1.5f64).exp()).abs() < 1e-12);

    let mut res = CreadetTestResult { statistic: 0.0, df: 0, p_value: 0.0, reject_null: false };
    unsafe { assert_eq!(creadet_decide(g, df, CreadetStatistic::G, &mut res), CreadetStatus::Ok) };
    assert_eq!(res.reject_null, g > 4.0);
    assert!((res.p_value - (-g / 2.0).exp()).abs() < 1e-12);
}

#[test]
fn errors_set_status_and_message() {
    let mut out = 0.0;
    unsafe {
        assert_eq!(creadet_two_way_lr(ptr::null(), [1.0].as_ptr(), 1, &mut out), CreadetStatus::NullPointer);
        assert!(last_error().contains("NULL"));
        // An all-zero histogram has no distribution.
        assert_eq!(creadet_two_way_lr([1.0].as_ptr(), [0.0].as_ptr(), 1, &mut out), CreadetStatus::InvalidArgument);
        assert_eq!(creadet_two_way_lr([1.0].as_ptr(), [-1.0].as_ptr(), 1, &mut out), CreadetStatus::InvalidArgument);
        assert_eq!(creadet_chi2_survival(-1.0, 2, &mut out), CreadetStatus::InvalidArgument);
        assert_eq!(creadet_two_way_lr([1.0].as_ptr(), [1.0].as_ptr(), 1, ptr::null_mut()), CreadetStatus::NullPointer);
    }
    let bad = CString::new("{not json").unwrap();
    let mut model = ptr::null_mut();
    unsafe { assert_eq!(creadet_model_from_json(bad.as_ptr(), &mut model), CreadetStatus::InvalidJson) };
    assert!(model.is_null());
}

#[test]
fn model_round_trip_through_handles() {
    // 0 → 1 → 0 → 1 in one session, 1 → 1 in another.
    let events = [0usize, 1, 0, 1, 1, 1];
    let starts = [0usize, 4];
    unsafe {
        let mut stream = ptr::null_mut();
        assert_eq!(creadet_stream_new(2, events.as_ptr(), 6, starts.as_ptr(), 2, &mut stream), CreadetStatus::Ok);
        assert_eq!(creadet_stream_len(stream), 6);
        assert_eq!(creadet_stream_n_sessions(stream), 2);

        let mut model = ptr::null_mut();
        assert_eq!(creadet_model_fit(stream, 0.0, &mut model), CreadetStatus::Ok);
        assert_eq!(creadet_model_n_states(model), 2);
        let mut ll = 0.0;
        assert_eq!(creadet_model_log_likelihood(model, stream, &mut ll), CreadetStatus::Ok);
        // π = (1/2, 1/2); row 0 → 1 always; row 1: 1→0 once, 1→1 once.
        let want = 4.0 * 0.5f64.ln();
        assert!((ll - want).abs() < 1e-12);

        // JSON round trip.
        let mut json = ptr::null_mut();
        assert_eq!(creadet_model_to_json(model, &mut json), CreadetStatus::Ok);
        let mut again = ptr::null_mut();
        assert_eq!(creadet_model_from_json(json, &mut again), CreadetStatus::Ok);
        let mut ll2 = 0.0;
        assert_eq!(creadet_model_log_likelihood(again, stream, &mut ll2), CreadetStatus::Ok);
        assert_eq!(ll, ll2);
        creadet_string_free(json);

        // 0 → 0 never happens under the MLE.
        let zero = [0usize, 0];
        let mut z = ptr::null_mut();
        assert_eq!(creadet_stream_new(2, zero.as_ptr(), 2, starts.as_ptr(), 1, &mut z), CreadetStatus::Ok);
        assert_eq!(creadet_model_log_likelihood(model, z, &mut ll2), CreadetStatus::ZeroProbability);
        let mut smooth = ptr::null_mut();
        assert_eq!(creadet_model_perturb(model, 1e-3, &mut smooth), CreadetStatus::Ok);
        assert_eq!(creadet_model_log_likelihood(smooth, z, &mut ll2), CreadetStatus::Ok);
        assert!(ll2.is_finite());

        // Sampling is deterministic in the seed.
        let lengths = [5usize, 7];
        let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(creadet_model_sample(smooth, lengths.as_ptr(), 2, 9, &mut a), CreadetStatus::Ok);
        assert_eq!(creadet_model_sample(smooth, lengths.as_ptr(), 2, 9, &mut b), CreadetStatus::Ok);
        let (mut ea, mut eb) = ([0usize; 12], [0usize; 12]);
        assert_eq!(creadet_stream_copy_events(a, ea.as_mut_ptr(), 12), CreadetStatus::Ok);
        assert_eq!(creadet_stream_copy_events(b, eb.as_mut_ptr(), 12), CreadetStatus::Ok);
        assert_eq!(ea, eb);
        let mut st = [0usize; 2];
        assert_eq!(creadet_stream_copy_session_starts(a, st.as_mut_ptr(), 2), CreadetStatus::Ok);
        assert_eq!(st, [0, 5]);
        assert_eq!(creadet_stream_copy_events(a, ea.as_mut_ptr(), 3), CreadetStatus::BufferTooSmall);

        for s in [stream, z, a, b] {
            creadet_stream_free(s);
        }
        for m in [model, again, smooth] {
            creadet_model_free(m);
        }
        creadet_stream_free(ptr::null_mut());
        creadet_model_free(ptr::null_mut());
    }
}

#[test]
fn scan_finds_a_switch() {
    // Two periodic regimes: 0 1 2 0 1 2 ... then 3 4 3 4 ...
    let mut events: Vec<usize> = (0..90).map(|i| i % 3).collect();
    events.extend((0..90).map(|i| 3 + i % 2));
    let starts = [0usize];
    unsafe {
        let mut stream = ptr::null_mut();
        assert_eq!(creadet_stream_new(5, events.as_ptr(), events.len(), starts.as_ptr(), 1, &mut stream), CreadetStatus::Ok);
        let opts = CreadetScanOptions {
            kappa: 40,
            tau: 40,
            offscreen_only: false,
            variant: CreadetVariant::SplitVsPooled,
            model_class: CreadetModelClass::Multinomial,
            pseudocount: 0.0,
        };
        let mut trace = ptr::null_mut();
        assert_eq!(creadet_scan(stream, &opts, &mut trace), CreadetStatus::Ok);
        assert_eq!(creadet_trace_len(trace), 180 - 80 + 1);
        let mut best = CreadetRecord { t: 0, c: 0.0, nu: 0, c_scaled: 0.0 };
        assert_eq!(creadet_trace_argmax(trace, &mut best), CreadetStatus::Ok);
        assert_eq!(best.t, 90);
        assert_eq!(best.nu, 5);
        let mut first = best;
        assert_eq!(creadet_trace_get(trace, 0, &mut first), CreadetStatus::Ok);
        assert_eq!(first.t, 40);
        assert_eq!(creadet_trace_get(trace, 10_000, &mut first), CreadetStatus::InvalidArgument);

        let future = CreadetScanOptions { variant: CreadetVariant::SplitVsFuture, ..opts };
        let mut t2 = ptr::null_mut();
        assert_eq!(creadet_scan(stream, &future, &mut t2), CreadetStatus::InvalidArgument);
        assert!(last_error().contains("pseudocount"));

        creadet_trace_free(trace);
        creadet_stream_free(stream);
    }
}
