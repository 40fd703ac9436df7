#![no_main]

use deblur_core::Psf;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(psf) = Psf::parse_text(text) {
        let again = Psf::parse_text(&psf.to_text()).expect("serialized kernel parses");
        assert_eq!(again.side(), psf.side());
    }
});
