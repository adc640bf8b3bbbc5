#![no_main]
use libfuzzer_sys::fuzz_target;
use vbarms::io::parse_block_partition;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(p) = parse_block_partition(text) {
            let perm = p.permutation();
            assert_eq!(perm.len(), p.len());
            assert_eq!(p.block_sizes().iter().sum::<usize>(), p.len());
        }
    }
});
