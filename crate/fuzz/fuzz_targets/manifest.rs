#![no_main]

use deblur_core::synthesis::Manifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = Manifest::parse(text, ".") {
        let csv = m.to_csv().expect("parsed manifest serializes");
        let again = Manifest::parse(&csv, ".").expect("serialized manifest parses");
        assert_eq!(again.rows.len(), m.rows.len());
    }
});
