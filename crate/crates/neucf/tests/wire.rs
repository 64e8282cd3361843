use std::path::Path;

use neucf::session::{ClientCommand, Phase, ServerMessage};
use neucf_core::scenario::ControllerKind;
use neucf_core::tracker::Visibility;
use neucf_core::vision::ColorClass;
use neucf_core::Vec2;
use serde_json::Value;

fn fixture(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/wire").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Decodes, re-encodes and compares structurally with the golden document.
fn round_trip<T: serde::de::DeserializeOwned + serde::Serialize>(name: &str) -> T {
    let text = fixture(name);
    let value: T = serde_json::from_str(&text).unwrap();
    let golden: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_value(&value).unwrap(), golden, "{name}");
    value
}

#[test]
fn client_commands() {
    assert_eq!(round_trip::<ClientCommand>("start.json"), ClientCommand::Start { controller: ControllerKind::Poly, seed: 7 });
    assert_eq!(round_trip::<ClientCommand>("reset.json"), ClientCommand::Reset);
    assert_eq!(
        round_trip::<ClientCommand>("add_beacon.json"),
        ClientCommand::AddBeacon { color: ColorClass::Orange, pos_cm: Vec2::new(27.0, 35.0) }
    );
    assert_eq!(round_trip::<ClientCommand>("remove_beacon.json"), ClientCommand::RemoveBeacon { id: 0 });
    assert_eq!(
        round_trip::<ClientCommand>("move_beacon.json"),
        ClientCommand::MoveBeacon { id: 1, pos_cm: Vec2::new(15.0, 38.0) }
    );
    assert_eq!(round_trip::<ClientCommand>("set_speed.json"), ClientCommand::SetSpeed { multiplier: 0.5 });
}

#[test]
fn start_defaults() {
    let cmd: ClientCommand = serde_json::from_str(r#"{"type":"start"}"#).unwrap();
    assert_eq!(cmd, ClientCommand::Start { controller: ControllerKind::Neucf, seed: 0 });
    assert!(serde_json::from_str::<ClientCommand>(r#"{"type":"start","speed":2}"#).is_err());
    assert!(serde_json::from_str::<ClientCommand>(r#"{"type":"add_beacon","color":"red","pos_cm":[1,1]}"#).is_err());
}

#[test]
fn replies() {
    assert_eq!(round_trip::<ServerMessage>("ack.json"), ServerMessage::Ack { command: "start".into(), id: None });
    assert_eq!(round_trip::<ServerMessage>("ack_with_id.json"), ServerMessage::Ack { command: "add_beacon".into(), id: Some(2) });
    assert_eq!(
        round_trip::<ServerMessage>("nack.json"),
        ServerMessage::Nack { command: "remove_beacon".into(), reason: "unknown id".into() }
    );
}

#[test]
fn snapshots() {
    let ServerMessage::Snapshot(idle) = round_trip::<ServerMessage>("snapshot_idle.json") else { panic!("not a snapshot") };
    assert_eq!(idle.phase, Phase::Idle);
    assert!(idle.field.is_none());

    let ServerMessage::Snapshot(run) = round_trip::<ServerMessage>("snapshot_running.json") else { panic!("not a snapshot") };
    assert_eq!(run.phase, Phase::Running);
    assert_eq!(run.field.as_ref().unwrap().len(), 91);
    assert_eq!(run.winner, Some(52));
    assert_eq!(run.desirability, vec![(52, 0.6), (53, 0.4)]);
    assert_eq!(run.beacons[0].color_class, ColorClass::Orange);
    assert_eq!(run.beacons[1].visibility, Visibility::Disappeared);
    assert_eq!(run.ee.v, Vec2::new(6.0, 8.0));

    let ServerMessage::Snapshot(fin) = round_trip::<ServerMessage>("snapshot_finished.json") else { panic!("not a snapshot") };
    assert_eq!(fin.phase, Phase::Finished);
    assert_eq!(fin.winner, None);
}
