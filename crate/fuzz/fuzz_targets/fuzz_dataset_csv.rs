#![no_main]

use libfuzzer_sys::fuzz_target;

// the CSV parser must reject arbitrary text with an error, never a panic
fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = shiftgap::dataset::parse_dataset_csv(text, "fuzz");
        let _ = shiftgap::dataset::parse_features_csv(text);
    }
});
