//! Named problem instances with a default initial state and horizon.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::model::{build_model, point_mutation_generator, Interaction, Model};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    /// The result this instance exercises.
    pub realizes: &'static str,
    pub model: Model,
    pub initial: Vec<f64>,
    pub t_end: f64,
}

pub const PRESET_NAMES: [&str; 5] = ["sym2", "fit2asym", "mut4", "crowd3", "pert2"];

/// Perturbation shape used by `pert2` and the perturbation sweep.
pub fn pert2_shape() -> (Vec<f64>, Mat) {
    (
        vec![1.0, -0.5],
        Mat::from_rows(&[vec![0.1, 0.0], vec![0.0, 0.1]]).expect("2x2"),
    )
}

fn pair(r: [f64; 2], m: f64, k: f64) -> Model {
    build_model(
        2,
        r.to_vec(),
        k,
        Mat::from_rows(&[vec![0.0, m], vec![m, 0.0]]).expect("2x2"),
        Interaction::UniformLinear { a: r.to_vec() },
    )
    .expect("valid preset")
}

pub fn sym2() -> Model {
    pair([1.0, 1.0], 0.1, 10.0)
}

pub fn fit2asym() -> Model {
    pair([1.0, 2.0], 0.1, 1.0)
}

pub fn mut4() -> Model {
    Model::from_generator(
        vec![1.0; 4],
        100.0,
        &point_mutation_generator(0.01),
        Interaction::UniformLinear { a: vec![1.0; 4] },
    )
    .expect("valid preset")
}

pub fn crowd3() -> Model {
    build_model(
        3,
        vec![1.0, 1.4, 0.8],
        50.0,
        Mat::from_rows(&[
            vec![0.0, 0.05, 0.1],
            vec![0.05, 0.0, 0.02],
            vec![0.1, 0.02, 0.0],
        ])
        .expect("3x3"),
        Interaction::CrowdingLinear {
            alpha: Mat::from_rows(&[
                vec![1.0, 0.6, 0.3],
                vec![0.4, 1.0, 0.9],
                vec![0.7, 0.2, 1.0],
            ])
            .expect("3x3"),
        },
    )
    .expect("valid preset")
}

pub fn pert2(eps: f64) -> Result<Model> {
    let (amp, w) = pert2_shape();
    sym2().with_interaction(Interaction::Perturbed {
        a: vec![1.0, 1.0],
        eps,
        amp,
        w,
    })
}

pub fn preset(name: &str) -> Result<Preset> {
    let p = match name {
        "sym2" => Preset {
            name: "sym2",
            description: "two genotypes, equal rates r = [1, 1], mutation 0.1, K = 10, fitness-weighted",
            realizes: "symmetric equilibrium (5, 5); spectral gap 0.2; exponential convergence",
            model: sym2(),
            initial: vec![8.0, 2.0],
            t_end: 60.0,
        },
        "fit2asym" => Preset {
            name: "fit2asym",
            description: "two genotypes, r = [1, 2], mutation 0.1, K = 1, fitness-weighted",
            realizes: "Perron scaling with lambda_p = (2.8 + sqrt(1.04)) / 2; total mass K",
            model: fit2asym(),
            initial: vec![0.05, 0.05],
            t_end: 40.0,
        },
        "mut4" => Preset {
            name: "mut4",
            description: "four variants on two sites, point mutation rate 0.01 per replication, equal r, K = 100",
            realizes: "quasispecies equilibrium (25, 25, 25, 25); entropy identities; global attraction",
            model: mut4(),
            initial: vec![40.0, 30.0, 20.0, 5.0],
            t_end: 200.0,
        },
        "crowd3" => Preset {
            name: "crowd3",
            description: "three genotypes with heterogeneous crowding indices, K = 50",
            realizes: "existence of a positive stationary state by continuation",
            model: crowd3(),
            initial: vec![1.0, 1.0, 1.0],
            t_end: 100.0,
        },
        "pert2" => Preset {
            name: "pert2",
            description: "sym2 with a bounded tanh perturbation of size eps = 1e-3",
            realizes: "attraction and sqrt(eps) proximity for perturbed competition",
            model: pert2(1e-3)?,
            initial: vec![8.0, 2.0],
            t_end: 100.0,
        },
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Ok(p)
}

pub fn list_presets() -> Vec<Preset> {
    PRESET_NAMES
        .iter()
        .map(|n| preset(n).expect("catalog entries resolve"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_resolves_and_validates() {
        let all = list_presets();
        assert_eq!(all.len(), PRESET_NAMES.len());
        for p in &all {
            let rep = p.model.validate();
            assert!(rep.standing(), "{}: {:?}", p.name, rep.details);
            assert_eq!(p.initial.len(), p.model.n());
        }
        assert!(matches!(preset("nope"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn catalog_contents() {
        let m = preset("mut4").unwrap().model;
        assert_eq!((m.n(), m.big_k()), (4, 100.0));
        assert!(m.r().iter().all(|&r| r == 1.0));
        let s = preset("sym2").unwrap().model;
        assert_eq!(
            (s.r(), s.big_k(), s.mu()[(0, 1)]),
            (&[1.0, 1.0][..], 10.0, 0.1)
        );
        let f = preset("fit2asym").unwrap().model;
        assert_eq!((f.r(), f.big_k()), (&[1.0, 2.0][..], 1.0));
        assert!(f.is_fitness_weighted());
    }
}
