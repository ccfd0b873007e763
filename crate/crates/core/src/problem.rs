//! Benchmark problem descriptions: domain, boundary data, physics and
//! optimization parameters, and the initial design.
//!
//! A [`ProblemSpec`] is everything the pipeline needs to run on: a rectangle
//! with inlet/outlet predicates (evaluated at boundary-edge midpoints), the
//! inflow profiles, and the parameter blocks. Everything that is not an inlet
//! or the outlet is a no-slip wall.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::fespace::PhaseField;
use crate::mesh::{build_rect_mesh, BoundaryTag, Mesh, MeshError, Rect};
use crate::phasefield::OptParams;
use crate::stokes::PhysParams;

/// Predicate over points (used on boundary-edge midpoints).
pub type RegionFn = Arc<dyn Fn([f64; 2]) -> bool + Send + Sync>;
/// Scalar field over points.
pub type ScalarFn = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;
/// Vector field over points.
pub type VectorFn = Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>;

/// One inflow segment: where it lies and the velocity profile on it.
#[derive(Clone)]
pub struct Inlet {
    /// True on boundary-edge midpoints belonging to this inlet.
    pub on: RegionFn,
    /// Prescribed velocity on the inlet.
    pub velocity: VectorFn,
}

/// Initial design field.
#[derive(Clone)]
pub enum InitField {
    /// Spatially constant value (the default is the volume fraction, which
    /// starts the run exactly on the volume constraint).
    Constant(f64),
    /// Independent uniform values in [0, 1) per vertex, from the run seed.
    RandomUniform,
    /// Arbitrary profile, clamped into [0, 1].
    Mask(ScalarFn),
}

impl fmt::Debug for InitField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitField::Constant(c) => write!(f, "Constant({c})"),
            InitField::RandomUniform => write!(f, "RandomUniform"),
            InitField::Mask(_) => write!(f, "Mask(..)"),
        }
    }
}

/// A complete description of one optimization run's continuous problem.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub domain: Rect,
    /// Structured initial mesh resolution (cells per direction).
    pub grid: (usize, usize),
    pub inlets: Vec<Inlet>,
    /// True on boundary-edge midpoints of the traction-free outlet.
    pub outlet: RegionFn,
    pub phys: PhysParams,
    pub opt: OptParams,
    pub init: InitField,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("grid", &self.grid)
            .field("inlets", &self.inlets.len())
            .field("phys", &self.phys)
            .field("opt", &self.opt)
            .field("init", &self.init)
            .finish()
    }
}

impl ProblemSpec {
    /// Tags a boundary-edge midpoint: outlet if the outlet predicate holds,
    /// otherwise a Dirichlet edge (inlet or wall).
    pub fn classify(&self, mid: [f64; 2]) -> BoundaryTag {
        if (self.outlet)(mid) {
            BoundaryTag::Outlet
        } else {
            BoundaryTag::Dirichlet
        }
    }

    /// Dirichlet velocity data: the first matching inlet's profile, zero on
    /// walls. Evaluated pointwise along boundary edges.
    pub fn dirichlet_data(&self, x: [f64; 2]) -> [f64; 2] {
        for inlet in &self.inlets {
            if (inlet.on)(x) {
                return (inlet.velocity)(x);
            }
        }
        [0.0, 0.0]
    }

    /// Builds the structured initial mesh with boundary tags derived from the
    /// inlet/outlet predicates.
    pub fn build_initial_mesh(&self) -> Result<Mesh, MeshError> {
        let (nx, ny) = self.grid;
        build_rect_mesh(self.domain, nx, ny, &|mid| Some(self.classify(mid)))
    }

    /// The initial design on `mesh`. The seed only matters for
    /// [`InitField::RandomUniform`].
    pub fn initial_phase(&self, mesh: &Mesh, seed: u64) -> PhaseField {
        match &self.init {
            InitField::Constant(c) => PhaseField::constant(mesh, *c),
            InitField::RandomUniform => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                PhaseField {
                    nodal_values: (0..mesh.n_vertices()).map(|_| rng.gen::<f64>()).collect(),
                }
            }
            InitField::Mask(f) => PhaseField::from_fn(mesh, |x| f(x).clamp(0.0, 1.0)),
        }
    }

    /// Checks parameter ranges; the message names the offending field.
    pub fn validate(&self) -> Result<(), String> {
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(msg.to_string()) };
        check(self.domain.x1 > self.domain.x0 && self.domain.y1 > self.domain.y0,
              "domain extents must be increasing")?;
        check(self.grid.0 >= 1 && self.grid.1 >= 1, "grid must be at least 1x1")?;
        check(self.opt.beta > 0.0 && self.opt.beta < 1.0,
              &format!("beta = {} out of range (0, 1)", self.opt.beta))?;
        check(self.phys.mu > 0.0, &format!("mu = {} must be positive", self.phys.mu))?;
        check(self.phys.alpha_max >= 0.0,
              &format!("alpha_max = {} must be nonnegative", self.phys.alpha_max))?;
        check(self.phys.epsilon > 0.0,
              &format!("epsilon = {} must be positive", self.phys.epsilon))?;
        check(self.phys.gamma > 0.0, &format!("gamma = {} must be positive", self.phys.gamma))?;
        check(self.opt.dt > 0.0, &format!("dt = {} must be positive", self.opt.dt))?;
        check(self.opt.s_tilde >= 0.0,
              &format!("s_tilde = {} must be nonnegative", self.opt.s_tilde))?;
        check(self.opt.zeta0 >= 0.0, &format!("zeta0 = {} must be nonnegative", self.opt.zeta0))?;
        check(self.opt.kappa >= 1.0, &format!("kappa = {} must be at least 1", self.opt.kappa))?;
        check(self.opt.n_outer >= 1, "n_outer must be at least 1")?;
        if let InitField::Constant(c) = self.init {
            check((0.0..=1.0).contains(&c),
                  &format!("initial phase value {c} out of range [0, 1]"))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phasefield::OptParams;

    fn wall_box(name: &str) -> ProblemSpec {
        ProblemSpec {
            name: name.to_string(),
            domain: Rect::UNIT,
            grid: (2, 2),
            inlets: vec![Inlet {
                on: Arc::new(|x| x[0] < 1e-12),
                velocity: Arc::new(|x| [4.0 * x[1] * (1.0 - x[1]), 0.0]),
            }],
            outlet: Arc::new(|x| x[0] > 1.0 - 1e-12),
            phys: PhysParams::default(),
            opt: OptParams::default(),
            init: InitField::Constant(0.5),
        }
    }

    #[test]
    fn classify_and_tag_mesh() {
        let spec = wall_box("box");
        let mesh = spec.build_initial_mesh().unwrap();
        let mut outlets = 0;
        let mut dirichlet = 0;
        for e in 0..mesh.n_edges() {
            match mesh.boundary_tag[e] {
                Some(BoundaryTag::Outlet) => outlets += 1,
                Some(BoundaryTag::Dirichlet) => dirichlet += 1,
                None => {}
            }
        }
        // 2x2 grid: 2 boundary edges per side; the whole right side is outlet.
        assert_eq!(outlets, 2);
        assert_eq!(dirichlet, 6);
        assert_eq!(spec.dirichlet_data([0.0, 0.5]), [1.0, 0.0]);
        assert_eq!(spec.dirichlet_data([0.5, 0.0]), [0.0, 0.0]);
    }

    #[test]
    fn initial_phase_variants() {
        let spec = wall_box("box");
        let mesh = spec.build_initial_mesh().unwrap();
        let phi = spec.initial_phase(&mesh, 0);
        assert!(phi.nodal_values.iter().all(|&v| v == 0.5));

        let mut random = spec.clone();
        random.init = InitField::RandomUniform;
        let a = random.initial_phase(&mesh, 7);
        let b = random.initial_phase(&mesh, 7);
        let c = random.initial_phase(&mesh, 8);
        assert_eq!(a.nodal_values, b.nodal_values);
        assert_ne!(a.nodal_values, c.nodal_values);
        assert!(a.nodal_values.iter().all(|&v| (0.0..1.0).contains(&v)));
    }

    #[test]
    fn validation_names_the_field() {
        let mut spec = wall_box("box");
        spec.opt.beta = 1.5;
        let err = spec.validate().unwrap_err();
        assert!(err.contains("beta"), "got: {err}");
        spec.opt.beta = 0.5;
        spec.phys.epsilon = 0.0;
        assert!(spec.validate().unwrap_err().contains("epsilon"));
    }
}
