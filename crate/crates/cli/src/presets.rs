//! Named configurations for the published figures.
//!
//! Parameters a figure leaves open use the documented defaults
//! (`eta = 1`, `delta = 1`).

use crate::config::{CliError, Entries};

pub struct Preset {
    pub name: &'static str,
    pub doc: &'static str,
    base: Vec<(&'static str, String)>,
    curves: Vec<(String, Vec<(&'static str, String)>)>,
}

pub const NAMES: &[&str] = &["fig1a", "fig1b", "fig1c", "fig1d", "fig2", "fig3", "fig4", "fig5"];

/// Sites drawn once from 1..=9 for the multi-QDP figure.
pub const FIG1C_SITES: &str = "4,7,1,9,3,6,2,8,5,1";

impl Preset {
    /// `(label, entries)` per curve, preset values only.
    pub fn curves(&self) -> Vec<(String, Entries)> {
        self.curves
            .iter()
            .map(|(label, extra)| {
                let mut e: Entries = self.base.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
                e.extend(extra.iter().map(|(k, v)| (k.to_string(), v.clone())));
                (label.clone(), e)
            })
            .collect()
    }
}

fn kv(pairs: &[(&'static str, &str)]) -> Vec<(&'static str, String)> {
    pairs.iter().map(|(k, v)| (*k, v.to_string())).collect()
}

fn states() -> [(&'static str, Vec<(&'static str, String)>); 2] {
    [
        ("unentangled", kv(&[("state", "unentangled"), ("beta2", "0.5")])),
        ("entangled", kv(&[("state", "entangled"), ("beta2", "0.5"), ("r", "5")])),
    ]
}

pub fn preset(name: &str) -> Result<Preset, CliError> {
    let p = match name {
        "fig1a" => Preset {
            name: "fig1a",
            doc: "Single projective measurement along z and x, both initial states, vs t0.",
            base: kv(&[("scenario", "echo-single"), ("N", "1000"), ("delta", "1"), ("m", "1"), ("t0", "0:20:0.05")]),
            curves: ["project-z", "project-x"]
                .iter()
                .flat_map(|ch| {
                    states().into_iter().map(move |(s, mut e)| {
                        e.push(("channel", ch.to_string()));
                        (format!("{ch} {s}"), e)
                    })
                })
                .collect(),
        },
        "fig1b" => Preset {
            name: "fig1b",
            doc: "Real part of the three-insertion σ^z string at sites 1, 2, 3 truncated at 2, 3 and 4 Green factors, vs t0.",
            base: kv(&[
                ("scenario", "echo-multi"),
                ("quantity", "string"),
                ("N", "1000"),
                ("sites", "1,2,3"),
                ("beta2", "0.5"),
                ("t0", "0:5:0.05"),
            ]),
            curves: [2, 3, 4]
                .iter()
                .map(|o| (format!("order {o}"), kv(&[("order", &o.to_string())])))
                .collect(),
        },
        "fig1c" => Preset {
            name: "fig1c",
            doc: "Echo after n sequential z measurements at random sites, quadratic truncation, for four spacings.",
            base: kv(&[
                ("scenario", "echo-multi"),
                ("N", "1000"),
                ("channel", "project-z"),
                ("sites", FIG1C_SITES),
                ("order", "2"),
                ("beta2", "0.5"),
                ("n", "1:10:1"),
            ]),
            curves: ["0.1", "0.5", "1.0", "5.0"]
                .iter()
                .map(|t0| (format!("t0={t0}"), kv(&[("t0", t0)])))
                .collect(),
        },
        "fig1d" => Preset {
            name: "fig1d",
            doc: "Single coherent QDP with gamma=(1+i)/sqrt3, delta=1/sqrt3, both initial states, vs t0.",
            base: kv(&[
                ("scenario", "echo-coherent"),
                ("N", "1000"),
                ("m", "1"),
                ("gamma-re", "0.5773502691896258"),
                ("gamma-im", "0.5773502691896258"),
                ("gate-delta-re", "0.5773502691896258"),
                ("gate-delta-im", "0"),
                ("t0", "0:50:0.1"),
            ]),
            curves: states().into_iter().map(|(s, e)| (s.to_string(), e)).collect(),
        },
        "fig2" => Preset {
            name: "fig2",
            doc: "Kicked Green function column 1 over (site, kick) for (tau, g) in {0.1, 0.9} x {0.1, 1, 5}, plus the free XY chain.",
            base: kv(&[("scenario", "harper-green"), ("N", "1000"), ("n", "100")]),
            curves: {
                let mut c: Vec<_> = ["0.1", "0.9"]
                    .iter()
                    .flat_map(|tau| {
                        ["0.1", "1.0", "5.0"]
                            .iter()
                            .map(move |g| (format!("tau={tau} g={g}"), kv(&[("tau", tau), ("g", g)])))
                    })
                    .collect();
                c.push(("xy".to_string(), kv(&[("tau", "0.1"), ("g", "0")])));
                c
            },
        },
        "fig3" => Preset {
            name: "fig3",
            doc: "Kicked forward, free backward: N=1000 averaged over inputs and N=10 for the fixed balanced state, tau in {0.1, 0.3, 0.8}, g in {0.1, 1}.",
            base: kv(&[("scenario", "harper-echo"), ("beta2", "0.5")]),
            curves: [("1000", "true"), ("10", "false")]
                .iter()
                .flat_map(|(n, avg)| {
                    [("0.1", "0:1000:1"), ("0.3", "0:333:1"), ("0.8", "0:125:1")]
                        .iter()
                        .flat_map(move |(tau, kicks)| {
                            ["0.1", "1.0"].iter().map(move |g| {
                                (
                                    format!("N={n} averaged={avg} tau={tau} g={g}"),
                                    kv(&[("N", n), ("averaged", avg), ("tau", tau), ("g", g), ("n", kicks)]),
                                )
                            })
                        })
                })
                .collect(),
        },
        "fig4" => Preset {
            name: "fig4",
            doc: "Single z or x measurement at m=1 after n0 kicks, g=1, for four periods; N=10 from the dense oracle and N=1000 analytic. \
                  The caption names the z basis twice; the body pairs z with the unity limit and x with one half, which this preset follows.",
            base: kv(&[("g", "1"), ("m", "1"), ("beta2", "0.5"), ("n", "0:60:1")]),
            curves: ["project-z", "project-x"]
                .iter()
                .flat_map(|ch| {
                    ["0.1", "0.3", "0.5", "0.8"].iter().flat_map(move |tau| {
                        [
                            ("10", kv(&[("scenario", "oracle"), ("model", "harper"), ("N", "10")])),
                            ("1000", kv(&[("scenario", "harper-echo-qdp"), ("N", "1000")])),
                        ]
                        .into_iter()
                        .map(move |(n, mut e)| {
                            e.push(("channel", ch.to_string()));
                            e.push(("tau", tau.to_string()));
                            (format!("{ch} tau={tau} N={n}"), e)
                        })
                    })
                })
                .collect(),
        },
        "fig5" => Preset {
            name: "fig5",
            doc: "Reverse kicking with forward period tau and backward period tau2 at commensurate times up to t=100, N=1000, g=1.",
            base: kv(&[("scenario", "harper-reverse"), ("N", "1000"), ("g", "1"), ("beta2", "0.5"), ("t", "100")]),
            curves: [("0.1", "0.2"), ("0.3", "0.4"), ("0.8", "0.9"), ("0.1", "0.4"), ("0.1", "0.9")]
                .iter()
                .map(|(a, b)| (format!("tau={a} tau2={b}"), kv(&[("tau", a), ("tau2", b)])))
                .collect(),
        },
        other => {
            return Err(CliError::Usage(format!(
                "unknown preset `{other}` (known: {})",
                NAMES.join(", ")
            )))
        }
    };
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{CurveConfig, RunConfig};

    fn resolved(name: &str) -> RunConfig {
        RunConfig::resolve(Some(&preset(name).unwrap()), &Entries::new(), &Entries::new()).unwrap()
    }

    #[test]
    fn every_preset_resolves() {
        for name in NAMES {
            let cfg = resolved(name);
            assert!(!cfg.curves.is_empty(), "{name}");
        }
        assert!(matches!(preset("nope"), Err(CliError::Usage(_))));
    }

    #[test]
    fn preset_parameters() {
        let d = resolved("fig1d");
        let gate = d.curves[0].gate;
        let s = 3f64.sqrt();
        assert!((gate.gamma().re - 1.0 / s).abs() < 1e-15 && (gate.gamma().im - 1.0 / s).abs() < 1e-15);
        let fig2 = resolved("fig2");
        let pairs: Vec<(f64, f64)> = fig2.curves.iter().take(6).map(|c: &CurveConfig| (c.tau, c.g)).collect();
        assert_eq!(pairs, vec![(0.1, 0.1), (0.1, 1.0), (0.1, 5.0), (0.9, 0.1), (0.9, 1.0), (0.9, 5.0)]);
        let fig1a = resolved("fig1a");
        assert_eq!(fig1a.curves.len(), 4);
        assert!(fig1a.curves.iter().all(|c| c.eta == 1 && c.delta == 1.0));
    }
}
