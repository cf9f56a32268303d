#![no_main]

use libfuzzer_sys::fuzz_target;

// The trace parser must never panic, and accepted rows must survive a
// write/parse cycle value-exactly (NaN payloads are canonicalized).
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rows) = conewton::io::parse_trace_csv(text) {
        let again = conewton::io::write_trace_csv(&rows);
        let back = conewton::io::parse_trace_csv(&again).expect("own output reparses");
        assert_eq!(rows.len(), back.len());
        for (a, b) in rows.iter().zip(&back) {
            assert_eq!(a.k, b.k);
            for (x, y) in [
                (a.residual_norm, b.residual_norm),
                (a.step_norm, b.step_norm),
                (a.fc_bound, b.fc_bound),
                (a.t_k, b.t_k),
                (a.eps_k, b.eps_k),
            ] {
                assert!(x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()));
            }
        }
    }
});
