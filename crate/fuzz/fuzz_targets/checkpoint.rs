#![no_main]

use deblur_core::network::Checkpoint;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(ck) = Checkpoint::decode(data) {
        let again = Checkpoint::decode(&ck.encode()).expect("encoded checkpoint decodes");
        assert_eq!(again.arch, ck.arch);
        assert_eq!(again.nets.denoiser.flat().len(), ck.nets.denoiser.flat().len());
    }
});
