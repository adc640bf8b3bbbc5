#![no_main]
use libfuzzer_sys::fuzz_target;
use vbarms::io::{read_matrix_market, ReadLimits};

fuzz_target!(|data: &[u8]| {
    let limits = ReadLimits { max_dim: 1 << 12, max_entries: 1 << 16 };
    if let Ok(a) = read_matrix_market(data, limits) {
        assert_eq!(a.row_ptr().len(), a.n_rows() + 1);
        assert_eq!(a.col_idx().len(), a.nnz());
        assert!(a.col_idx().iter().all(|&c| c < a.n_cols()));
    }
});
