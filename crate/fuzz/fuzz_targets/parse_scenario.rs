#![no_main]

use libfuzzer_sys::fuzz_target;
use mutsel::scenario::Scenario;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(sc) = Scenario::from_json_str(text) {
        assert!(!sc.tasks.is_empty());
        let _ = sc.perturbation_parts();
    }
});
