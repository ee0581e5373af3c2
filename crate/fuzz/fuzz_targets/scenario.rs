#![no_main]

use libfuzzer_sys::{fuzz_target, Corpus};
use wcu_core::model::Scenario;

fuzz_target!(|data: &[u8]| -> Corpus {
    let Ok(sc) = Scenario::from_json_slice(data) else {
        return Corpus::Reject;
    };
    let text = sc.to_json_string();
    let again = Scenario::from_json_slice(text.as_bytes()).expect("re-parse of serialized scenario");
    assert_eq!(text, again.to_json_string());
    Corpus::Keep
});
