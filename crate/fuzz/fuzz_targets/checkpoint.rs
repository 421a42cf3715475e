#![no_main]

use corridor::ppo::PolicyCheckpoint;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    // Anything that parses has passed validation and must deploy and act.
    if let Ok(ckpt) = PolicyCheckpoint::from_json_str(text) {
        if ckpt.n <= 16 {
            let policy = ckpt.deploy(ckpt.n).expect("validated checkpoint deploys");
            let obs = vec![0.5; ckpt.observation_len];
            for agent in &policy.agents {
                let (logits, _) = agent.forward(&obs);
                assert_eq!(logits.len(), ckpt.architecture.action_bits(ckpt.n));
            }
        }
    }
});
