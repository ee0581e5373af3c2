#![no_main]

use libfuzzer_sys::{fuzz_target, Corpus};
use wcu_core::surrogate::{eval_delay, eval_utility, SurrogateSet};

fuzz_target!(|data: &[u8]| -> Corpus {
    let Ok(set) = SurrogateSet::from_json_slice(data) else {
        return Corpus::Reject;
    };
    let text = set.to_json_string();
    let again = SurrogateSet::from_json_slice(text.as_bytes()).expect("re-parse of serialized surrogate");
    assert_eq!(set, again);
    // Validated sets must evaluate to finite values anywhere in their bounds.
    for lane in &set.lanes {
        let (lo, hi) = lane.green_bounds();
        for g in [lo, (lo + hi) / 2.0, hi] {
            let d = eval_delay(&set, &lane.lane, g).expect("listed lane");
            assert!(d.is_finite());
            for n in 0..=lane.n_max() {
                assert!(eval_utility(&set, &lane.lane, f64::from(n), g).expect("listed lane").is_finite());
            }
        }
    }
    Corpus::Keep
});
