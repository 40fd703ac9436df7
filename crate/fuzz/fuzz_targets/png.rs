#![no_main]

use deblur_core::io::{decode_png, encode_png};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = decode_png(data) {
        let bytes = encode_png(&img).expect("decoded image encodes");
        let again = decode_png(&bytes).expect("encoded image decodes");
        assert_eq!(again, img);
    }
});
