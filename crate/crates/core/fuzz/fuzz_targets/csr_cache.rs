#![no_main]
use libfuzzer_sys::fuzz_target;
use vbarms::io::{decode_csr_cache, write_csr_cache};

fuzz_target!(|data: &[u8]| {
    if let Ok(a) = decode_csr_cache(data) {
        let mut out = Vec::new();
        write_csr_cache(&a, &mut out).unwrap();
        assert_eq!(decode_csr_cache(&out).unwrap(), a);
    }
});
