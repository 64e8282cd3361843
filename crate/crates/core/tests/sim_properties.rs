use neucf_core::scenario::{builtin, Action, ControllerKind, Event, ScenarioScript, BUILTIN_NAMES};
use neucf_core::sim::{run_scenario, RunStatus, SimConfig};
use neucf_core::vision::ColorClass;
use neucf_core::{Vec2, MAX_SPEED};
use proptest::prelude::*;

#[test]
fn builtins_are_deterministic() {
    for name in BUILTIN_NAMES {
        for kind in [ControllerKind::Neucf, ControllerKind::Poly] {
            let mut s = builtin(name).unwrap();
            s.controller = kind;
            s.seed = 7;
            let a = run_scenario(&s, &SimConfig::default()).unwrap();
            let b = run_scenario(&s, &SimConfig::default()).unwrap();
            assert_eq!(a.log, b.log, "{name}");
            assert_eq!(a.status, b.status);
        }
    }
}

#[test]
fn seeds_change_noisy_runs() {
    let mut s = builtin("static_1").unwrap();
    let a = run_scenario(&s, &SimConfig::default()).unwrap();
    s.seed = 1;
    let b = run_scenario(&s, &SimConfig::default()).unwrap();
    assert_ne!(a.log, b.log);
}

#[test]
fn event_applied_before_tick() {
    let s = builtin("stop").unwrap();
    let out = run_scenario(&s, &SimConfig::default()).unwrap();
    let at = out.log.samples.iter().position(|x| (x.t - 2.01).abs() < 1e-9).unwrap();
    assert!(out.log.samples[at].beacons.iter().any(|b| b.color_class == ColorClass::Green));
    assert!(!out.log.samples[at - 1].beacons.iter().any(|b| b.color_class == ColorClass::Green));
    assert_eq!(out.applied_events[1].t, 2.0);
}

#[test]
fn vision_mode_reaches_static_target() {
    let cfg = SimConfig { vision_mode: true, ..SimConfig::noiseless() };
    let out = run_scenario(&builtin("static_1").unwrap(), &cfg).unwrap();
    assert!(matches!(out.status, RunStatus::GoalReached { .. }));
    let p = out.log.last().p;
    assert!((p.x - 27.0).abs() < 1.0 && (p.y - 35.0).abs() < 1.0, "{p:?}");
}

#[test]
fn wta_only_reaches_static_target() {
    let mut cfg = SimConfig::noiseless();
    cfg.controller.wta_only = true;
    let out = run_scenario(&builtin("static_2").unwrap(), &cfg).unwrap();
    assert!(matches!(out.status, RunStatus::GoalReached { .. }));
}

#[test]
fn invalid_script_rejected() {
    let mut s = ScenarioScript::empty("bad");
    s.events.push(Event { t: 0.0, action: Action::RemoveBeacon { id: 3 } });
    assert!(run_scenario(&s, &SimConfig::default()).is_err());
}

fn arb_script() -> impl Strategy<Value = ScenarioScript> {
    let beacon = (1.0f64..51.0, 1.0f64..46.0, any::<bool>(), 0.0f64..3.0);
    (prop::collection::vec(beacon, 1..4), any::<u64>(), any::<bool>()).prop_map(|(beacons, seed, poly)| {
        let mut events: Vec<Event> = beacons
            .into_iter()
            .map(|(x, y, green, t)| Event {
                t: (t * 100.0).round() / 100.0,
                action: Action::AddBeacon {
                    color: if green { ColorClass::Green } else { ColorClass::Orange },
                    pos_cm: Vec2::new(x, y),
                },
            })
            .collect();
        events.sort_by(|a, b| a.t.total_cmp(&b.t));
        ScenarioScript {
            seed,
            time_limit: 8.0,
            events,
            controller: if poly { ControllerKind::Poly } else { ControllerKind::Neucf },
            ..ScenarioScript::empty("random")
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn run_invariants(script in arb_script()) {
        let out = run_scenario(&script, &SimConfig::default()).unwrap();
        let dt = out.log.dt;
        for (i, s) in out.log.samples.iter().enumerate() {
            prop_assert!(s.v.norm() <= MAX_SPEED + 1e-9);
            prop_assert!((s.t - i as f64 * dt).abs() < 1e-9);
            prop_assert!(s.p.x >= -1.0 && s.p.x <= 53.0 && s.p.y >= -1.0 && s.p.y <= 48.0, "{:?}", s.p);
        }
        prop_assert_eq!(out.log.field_history.len(), out.log.samples.len());
        prop_assert!(out.status.t() <= script.time_limit + 1e-9);
    }
}
