use oamsim::config::{parse_config, Scenario};
use oamsim::presets::{preset, PRESETS};
use oamsim::{normalized_echo, Config};

fn errors(text: &str) -> Vec<String> {
    parse_config(text).unwrap_err().0.iter().map(|e| e.to_string()).collect()
}

#[test]
fn every_preset_parses_and_echoes_stably() {
    for (name, _) in PRESETS {
        let c = preset(name).unwrap().unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(c.scenario.name(), name);
        let echo = normalized_echo(&c);
        let again = parse_config(&echo).unwrap();
        assert_eq!(again, c, "{name}");
        assert_eq!(normalized_echo(&again), echo);
    }
}

#[test]
fn negative_duration_names_the_key() {
    let e = errors(
        "schema_version = 1\nscenario = \"single_vortex\"\n[[sequence.pulses]]\nduration_s = -1e-6\n",
    );
    assert!(e.iter().any(|m| m.starts_with("sequence.pulses[0].duration_s")), "{e:?}");
}

#[test]
fn unknown_key_gets_a_suggestion() {
    let e = errors("schema_version = 1\n[grid]\nn_yy = 128\n");
    assert_eq!(e.len(), 1, "{e:?}");
    assert!(e[0].contains("grid.n_yy") && e[0].contains("n_y"), "{e:?}");
}

#[test]
fn bad_enum_value_lists_choices() {
    let e = errors("schema_version = 1\nscenario = \"single_vortx\"\n");
    assert!(e[0].contains("single_vortex"), "{e:?}");
}

#[test]
fn all_problems_are_reported_together() {
    let e = errors(
        "schema_version = 1\n[grid]\nn_y = 100\nn_max = 9\n[dynamics]\ndt_s = \"fast\"\n[imaging]\norders = []\n",
    );
    for key in ["grid.n_y", "grid.n_max", "dynamics.dt_s", "imaging.orders"] {
        assert!(e.iter().any(|m| m.starts_with(key)), "{key} missing from {e:?}");
    }
}

#[test]
fn schema_version_is_checked() {
    assert!(errors("scenario = \"custom\"\n")[0].contains("schema_version"));
    assert!(errors("schema_version = 99\n")[0].contains("99"));
}

#[test]
fn scenario_requirements() {
    let e = errors("schema_version = 1\nscenario = \"double_charge\"\n");
    assert!(e.iter().any(|m| m.starts_with("sequence.pulses")), "{e:?}");
    let e = errors("schema_version = 1\nscenario = \"phase_coherence\"\n[[sequence.pulses]]\n[analysis]\nphase_pulse = 3\n");
    assert!(e.iter().any(|m| m.starts_with("analysis.phase_pulse")), "{e:?}");
}

#[test]
fn empty_document_is_the_default_custom_run() {
    let c = parse_config("schema_version = 1\n").unwrap();
    assert_eq!(c, Config::default());
    assert_eq!(c.scenario, Scenario::Custom);
    assert!(c.sequence.pulses.is_empty());
}
