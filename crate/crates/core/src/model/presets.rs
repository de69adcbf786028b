//! Built-in workload presets for the three reference applications.

use std::collections::BTreeMap;

use super::{
    Bound, ChainSpec, ComputeModel, Constants, DagSpec, NodeSpec, ObjectiveSpec, SubchainSpec,
};
use crate::error::{Error, Result};

pub const PRESET_NAMES: &[&str] = &["facetrack", "nav2d", "nav2d_yolo", "vr"];

pub fn preset(name: &str) -> Result<DagSpec> {
    match name {
        "facetrack" => Ok(facetrack()),
        "nav2d" => Ok(nav2d(false)),
        "nav2d_yolo" => Ok(nav2d(true)),
        "vr" => Ok(vr()),
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}

fn constant(ms: f64) -> ComputeModel {
    ComputeModel::Constant { ms }
}

fn tnorm(mean: f64, std: f64, lo: f64, hi: f64) -> ComputeModel {
    ComputeModel::TruncatedNormal {
        mean_ms: mean,
        std_ms: std,
        lo_ms: lo,
        hi_ms: hi,
    }
}

/// Rotating camera tracking a moving face: a single linear pipeline of image
/// capture (25 ms), detection (55-60 ms), and velocity planning (1 ms).
fn facetrack() -> DagSpec {
    DagSpec {
        schema: 1,
        cores: 1,
        nodes: vec![
            NodeSpec::new("camera", constant(25.0)),
            NodeSpec::new(
                "detector",
                ComputeModel::Uniform {
                    lo_ms: 55.0,
                    hi_ms: 60.0,
                },
            ),
            NodeSpec::new("planner", constant(1.0)),
        ],
        edges: vec![
            ("camera".into(), "detector".into()),
            ("detector".into(), "planner".into()),
        ],
        subchains: vec![SubchainSpec {
            id: "track".into(),
            node_ids: vec!["camera".into(), "detector".into(), "planner".into()],
        }],
        chains: vec![ChainSpec {
            id: "track".into(),
            subchain_ids: vec!["track".into()],
        }],
        objective: ObjectiveSpec {
            response_time_weights: BTreeMap::from([("track".into(), 1.0)]),
            priority: vec!["track".into()],
            ..Default::default()
        },
        constants: Constants::default(),
    }
}

/// Exploration robot: a local obstacle-avoidance subchain plus global
/// localization (streaming, bimodal with costly episodes), mapping and
/// planning (both growing with map size), and navigation command. The yolo
/// variant adds a low-priority object-detection chain whose cost also grows
/// over the run.
fn nav2d(with_yolo: bool) -> DagSpec {
    let mut nodes = vec![
        NodeSpec::new("scan", constant(0.5)),
        NodeSpec::new("lm", tnorm(3.0, 0.3, 2.0, 4.5)),
        NodeSpec::new("lp", tnorm(2.0, 0.2, 1.4, 3.0)),
        NodeSpec {
            streaming: true,
            ..NodeSpec::new(
                "gl",
                ComputeModel::Spike {
                    base: Box::new(ComputeModel::Bimodal {
                        p_cheap: 0.6,
                        cheap: Box::new(constant(2.0)),
                        expensive: Box::new(tnorm(18.0, 2.0, 12.0, 26.0)),
                    }),
                    rate_hz: 0.08,
                    spike_ms: 110.0,
                },
            )
        },
        NodeSpec::new(
            "gm",
            ComputeModel::Drift {
                base_ms: 25.0,
                slope_ms_per_s: 0.35,
            },
        ),
        NodeSpec::new(
            "gp",
            ComputeModel::Drift {
                base_ms: 30.0,
                slope_ms_per_s: 0.5,
            },
        ),
        NodeSpec::new("nc", constant(1.0)),
    ];
    let mut edges: Vec<(String, String)> = [
        ("scan", "lm"),
        ("lm", "lp"),
        ("scan", "gl"),
        ("gl", "gm"),
        ("gl", "gp"),
        ("gm", "gp"),
        ("gl", "nc"),
        ("gp", "nc"),
        ("nc", "lp"),
    ]
    .iter()
    .map(|(a, b)| (a.to_string(), b.to_string()))
    .collect();
    let mut subchains = vec![
        SubchainSpec {
            id: "local".into(),
            node_ids: vec!["scan".into(), "lm".into(), "lp".into()],
        },
        SubchainSpec {
            id: "gl".into(),
            node_ids: vec!["gl".into()],
        },
        SubchainSpec {
            id: "gm".into(),
            node_ids: vec!["gm".into()],
        },
        SubchainSpec {
            id: "gp".into(),
            node_ids: vec!["gp".into()],
        },
        SubchainSpec {
            id: "nc".into(),
            node_ids: vec!["nc".into()],
        },
    ];
    let mut chains = vec![
        ChainSpec {
            id: "local".into(),
            subchain_ids: vec!["local".into()],
        },
        ChainSpec {
            id: "gm_chain".into(),
            subchain_ids: vec![
                "gl".into(),
                "gm".into(),
                "gp".into(),
                "nc".into(),
                "local".into(),
            ],
        },
        ChainSpec {
            id: "gp_chain".into(),
            subchain_ids: vec!["gl".into(), "gp".into(), "nc".into(), "local".into()],
        },
        ChainSpec {
            id: "nc_chain".into(),
            subchain_ids: vec!["gl".into(), "nc".into(), "local".into()],
        },
    ];
    let mut rt_weights = BTreeMap::from([
        ("local".to_string(), 1.0),
        ("gm_chain".to_string(), 0.005),
        ("gp_chain".to_string(), 0.005),
        ("nc_chain".to_string(), 0.005),
    ]);
    let mut priority: Vec<String> = ["local", "gl", "nc", "gm", "gp"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut node_bounds = BTreeMap::from([
        (
            // scans arrive at 50 Hz at most
            "gl".to_string(),
            Bound {
                min: None,
                max: Some(50.0),
            },
        ),
        (
            "gp".to_string(),
            Bound {
                min: Some(0.25),
                max: Some(1.0),
            },
        ),
    ]);
    let mut chain_period_bounds = BTreeMap::new();

    if with_yolo {
        nodes.push(NodeSpec::new("pre", constant(25.0)));
        nodes.push(NodeSpec::new(
            "yolo",
            ComputeModel::Bimodal {
                p_cheap: 0.5,
                cheap: Box::new(ComputeModel::Drift {
                    base_ms: 270.0,
                    slope_ms_per_s: 1.8,
                }),
                expensive: Box::new(ComputeModel::Drift {
                    base_ms: 330.0,
                    slope_ms_per_s: 2.2,
                }),
            },
        ));
        edges.push(("pre".into(), "yolo".into()));
        subchains.push(SubchainSpec {
            id: "pre".into(),
            node_ids: vec!["pre".into()],
        });
        subchains.push(SubchainSpec {
            id: "yolo".into(),
            node_ids: vec!["yolo".into()],
        });
        chains.push(ChainSpec {
            id: "detect".into(),
            subchain_ids: vec!["pre".into(), "yolo".into()],
        });
        rt_weights.insert("detect".into(), 0.0005);
        priority.push("pre".into());
        priority.push("yolo".into());
        node_bounds.insert(
            "lm".into(),
            Bound {
                min: Some(5.0),
                max: None,
            },
        );
        chain_period_bounds.insert(
            "detect".into(),
            Bound {
                min: None,
                max: Some(6000.0),
            },
        );
    }

    let mut constants = Constants::default();
    constants.max_reciprocal = 64;

    DagSpec {
        schema: 1,
        cores: 1,
        nodes,
        edges,
        subchains,
        chains,
        objective: ObjectiveSpec {
            w3s: BTreeMap::from([("gl".to_string(), 0.5)]),
            response_time_weights: rt_weights,
            node_throughput_bounds_hz: node_bounds,
            chain_period_bounds_ms: chain_period_bounds,
            priority,
            ..Default::default()
        },
        constants,
    }
}

/// Head-mounted display pipeline: a free-running IMU+integrator subchain,
/// camera+VIO pose estimation, scene rendering, and reprojection (timewarp)
/// pinned to the 120 Hz display refresh.
fn vr() -> DagSpec {
    DagSpec {
        schema: 1,
        cores: 1,
        nodes: vec![
            NodeSpec {
                explicitly_scheduled: false,
                fixed_period_ms: Some(5.0),
                ..NodeSpec::new("imu", constant(0.05))
            },
            NodeSpec {
                explicitly_scheduled: false,
                ..NodeSpec::new("int", constant(0.05))
            },
            NodeSpec::new("cam", constant(1.0)),
            NodeSpec::new("vio", tnorm(45.0, 8.0, 28.0, 75.0)),
            NodeSpec::new("render", tnorm(4.0, 0.4, 3.0, 5.5)),
            NodeSpec::new("tw", tnorm(1.5, 0.15, 1.1, 2.0)),
        ],
        edges: [
            ("imu", "int"),
            ("imu", "vio"),
            ("cam", "vio"),
            ("vio", "int"),
            ("int", "render"),
            ("int", "tw"),
            ("render", "tw"),
        ]
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect(),
        subchains: vec![
            SubchainSpec {
                id: "imu_int".into(),
                node_ids: vec!["imu".into(), "int".into()],
            },
            SubchainSpec {
                id: "cam_vio".into(),
                node_ids: vec!["cam".into(), "vio".into()],
            },
            SubchainSpec {
                id: "render".into(),
                node_ids: vec!["render".into()],
            },
            SubchainSpec {
                id: "tw".into(),
                node_ids: vec!["tw".into()],
            },
        ],
        chains: vec![
            ChainSpec {
                id: "rot".into(),
                subchain_ids: vec!["imu_int".into(), "tw".into()],
            },
            ChainSpec {
                id: "trans".into(),
                subchain_ids: vec!["imu_int".into(), "render".into(), "tw".into()],
            },
            ChainSpec {
                id: "vio_pose".into(),
                subchain_ids: vec!["cam_vio".into(), "imu_int".into(), "tw".into()],
            },
            ChainSpec {
                id: "vio_trans".into(),
                subchain_ids: vec![
                    "cam_vio".into(),
                    "imu_int".into(),
                    "render".into(),
                    "tw".into(),
                ],
            },
        ],
        objective: ObjectiveSpec {
            response_time_weights: BTreeMap::from([
                ("rot".to_string(), 1.0),
                ("trans".to_string(), 0.5),
                ("vio_pose".to_string(), 0.005),
                ("vio_trans".to_string(), 0.005),
            ]),
            node_throughput_bounds_hz: BTreeMap::from([
                (
                    // display refresh pins the reprojection rate
                    "tw".to_string(),
                    Bound {
                        min: Some(120.0),
                        max: Some(120.0),
                    },
                ),
                (
                    "render".to_string(),
                    Bound {
                        min: None,
                        max: Some(120.0),
                    },
                ),
            ]),
            // reprojection first so each render lands close to the next one
            priority: vec!["tw".into(), "cam_vio".into(), "render".into()],
            ..Default::default()
        },
        constants: Constants::default(),
    }
}
