#![no_main]

use libfuzzer_sys::fuzz_target;
use mutsel::Model;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = Model::from_json_str(text) {
        let back = Model::from_json_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        let _ = m.validate();
    }
});
