#![no_main]

use libfuzzer_sys::{fuzz_target, Corpus};
use wcu_core::model::RoadNetwork;

fuzz_target!(|data: &[u8]| -> Corpus {
    let Ok(net) = RoadNetwork::from_json_slice(data) else {
        return Corpus::Reject;
    };
    let text = net.to_json_string();
    let again = RoadNetwork::from_json_slice(text.as_bytes()).expect("re-parse of serialized network");
    assert_eq!(text, again.to_json_string());
    Corpus::Keep
});
