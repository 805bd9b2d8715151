#![no_main]

use libfuzzer_sys::fuzz_target;
use mutsel::entropy::EntropyKernel;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(k) = text.parse::<EntropyKernel>() {
        let again: EntropyKernel = k.to_string().parse().unwrap();
        assert_eq!(again, k);
        let _ = (k.value(1.5), k.derivative(1.5), k.is_convex());
    }
});
