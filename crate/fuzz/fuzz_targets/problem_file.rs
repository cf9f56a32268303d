#![no_main]

use libfuzzer_sys::fuzz_target;

// The JSON problem-file parser must never panic, and anything it accepts
// must be internally consistent and safe to evaluate.
fuzz_target!(|data: &[u8]| {
    if let Ok((file, spec)) = conewton::io::parse_problem_bytes(data) {
        assert_eq!(file.n, spec.n);
        assert_eq!(file.m, spec.m);
        assert_eq!(spec.cone.dim(), spec.m);
        assert_eq!(spec.x0.len(), spec.n);
        let f = spec.eval(&spec.x0);
        assert_eq!(f.len(), spec.m);
        let j = spec.jac(&spec.x0);
        assert_eq!((j.nrows(), j.ncols()), (spec.m, spec.n));
    }
});
