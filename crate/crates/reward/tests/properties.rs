//! Random operation sequences: conservation, state monotonicity and the
//! anonymity scan.

use std::sync::Arc;

use chrono::Duration;
use poe_core::rng::{seeded, SharedRng};
use poe_core::{ManualClock, Pwd};
use poe_reward::audit::find_leak;
use poe_reward::{anonymize, RewardPolicy, RewardingSystem, RsConfig, TicketState};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};
use serde_json::{Map, Value};

#[derive(Debug, Clone)]
enum Op {
    Issue { pwd: usize },
    Redeem { ticket: usize, right: bool },
    Spend { voucher: usize },
    Wait { days: i64 },
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        (0usize..12).prop_map(|pwd| Op::Issue { pwd }),
        (any::<usize>(), any::<bool>()).prop_map(|(ticket, right)| Op::Redeem { ticket, right }),
        any::<usize>().prop_map(|voucher| Op::Spend { voucher }),
        (0i64..40).prop_map(|days| Op::Wait { days }),
    ]
}

fn config(cases: u32) -> Config {
    Config { cases, rng_seed: RngSeed::Fixed(0x5eed), ..Config::default() }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn state_machine_invariants(ops in prop::collection::vec(op(), 1..60), seed in any::<u64>()) {
        let clock = Arc::new(ManualClock::at("2025-06-01 T 12:00".parse().unwrap()));
        let rs = RewardingSystem::new(
            RsConfig::new(["education", "tourism"]),
            clock.clone(),
            SharedRng::new(seeded(seed)),
        );
        let mut rng = seeded(seed ^ 0xabcdef);
        let pwds: Vec<Pwd> = (0..12).map(|_| Pwd::generate(&mut rng)).collect();
        let mut tickets: Vec<(String, usize)> = Vec::new();
        let mut vouchers: Vec<String> = Vec::new();
        let mut prev = rs.state();

        for op in ops {
            match op {
                Op::Issue { pwd } => {
                    let fresh = !prev.seen_digests.contains(&pwds[pwd].digest());
                    let res = rs.issue("education", pwds[pwd].digest());
                    prop_assert_eq!(res.is_ok(), fresh);
                    if let Ok(r) = res {
                        tickets.push((r.otc, pwd));
                    }
                }
                Op::Redeem { ticket, right } if !tickets.is_empty() => {
                    let (otc, p) = &tickets[ticket % tickets.len()];
                    let attempt = if right { pwds[*p].clone() } else { Pwd::new("WRONGWRONGWRONG") };
                    if let Ok(v) = rs.redeem(otc, &attempt) {
                        prop_assert!(right);
                        vouchers.push(v.voucher_id);
                    }
                }
                Op::Spend { voucher } if !vouchers.is_empty() => {
                    let _ = rs.spend(&vouchers[voucher % vouchers.len()]);
                }
                Op::Wait { days } => clock.advance(Duration::days(days)),
                _ => {}
            }

            let now = rs.state();
            // Tickets only leave `issued`, and never come back.
            for (otc, before) in &prev.tickets {
                let after = &now.tickets[otc];
                prop_assert!(before.state == TicketState::Issued || before.state == after.state);
            }
            for (id, before) in &prev.vouchers {
                prop_assert!(before.state == poe_reward::VoucherState::Live || now.vouchers[id].state == before.state);
            }
            let stats = rs.stats();
            prop_assert!(stats.vouchers_minted as usize <= stats.tickets_issued);
            prop_assert!(stats.tickets_issued <= stats.digests_seen);

            let json = rs.state_json().unwrap();
            let secrets: Vec<&str> = pwds.iter().map(Pwd::as_str).collect();
            prop_assert_eq!(find_leak(json.as_bytes(), &secrets, 4), None);
            prev = now;
        }
    }
}

fn field_value() -> impl Strategy<Value = String> {
    "[A-Za-z0-9@._-]{4,24}"
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn anonymize_keeps_only_the_tag(
        fields in prop::collection::btree_map("[a-z_]{3,12}", field_value(), 0..8),
        exam in any::<bool>(),
    ) {
        let policy = RewardPolicy::new("activity")
            .map("exam-pass", "education")
            .map("museum-feedback", "tourism");
        let mut record: Map<String, Value> =
            fields.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
        let category = if exam { "exam-pass" } else { "museum-feedback" };
        record.insert("activity".into(), Value::String(category.into()));

        let tag = anonymize(&record, &policy).unwrap();
        prop_assert!(policy.reward_types().any(|t| t == tag));
        let values: Vec<&str> = fields
            .iter()
            .filter(|(k, _)| k.as_str() != "activity")
            .map(|(_, v)| v.as_str())
            .collect();
        prop_assert_eq!(find_leak(tag.as_bytes(), &values, 4), None);

        // Identifying fields have no influence on the output.
        let mut bare = Map::new();
        bare.insert("activity".into(), Value::String(category.into()));
        prop_assert_eq!(anonymize(&bare, &policy).unwrap(), tag);
    }
}
