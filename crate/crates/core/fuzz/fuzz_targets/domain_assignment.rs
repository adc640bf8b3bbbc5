#![no_main]
use libfuzzer_sys::fuzz_target;
use vbarms::io::parse_domain_assignment;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok((owner, p)) = parse_domain_assignment(text) {
            assert!(owner.iter().all(|&d| d < p));
            assert!(p <= owner.len());
        }
    }
});
