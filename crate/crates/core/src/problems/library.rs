use super::{node_dofs, Material, ProblemDefinition, ProblemKind};
use crate::error::{Error, Result};
use crate::fem::Spring;
use crate::grid::build_grid;
use crate::material::{InterpolationLaw, Isotropic2D, ThermalMaterial};

/// Names accepted by [`example_library`].
pub const EXAMPLES: [&str; 9] = [
    "cantilever",
    "cantilever-mid",
    "mbb",
    "lshape",
    "bridge",
    "gripper",
    "michell-multiload",
    "inverter",
    "heat-sink",
];

/// Reference call of a library example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExampleInfo {
    pub name: &'static str,
    pub kind: ProblemKind,
    pub summary: &'static str,
    pub nelx: usize,
    pub nely: usize,
    pub nsteps: usize,
    pub vol0: f64,
    pub vol: f64,
    pub k: f64,
    pub tau: f64,
}

const INFO: [ExampleInfo; 9] = [
    info(
        "cantilever",
        ProblemKind::Compliance,
        "tip load at the bottom-right corner, left edge clamped",
        (100, 50, 10, 0.0, 0.5, 0.0, 0.5),
    ),
    info(
        "cantilever-mid",
        ProblemKind::Compliance,
        "tip load at mid-height of the right edge, left edge clamped",
        (100, 50, 12, 0.0, 0.65, 0.0, 0.5),
    ),
    info(
        "mbb",
        ProblemKind::Compliance,
        "half MBB beam, load at the top-left corner",
        (150, 50, 10, 0.0, 0.6, 0.0, 1.0),
    ),
    info(
        "lshape",
        ProblemKind::Compliance,
        "L-shaped bracket with a passive upper-right block",
        (100, 100, 12, 0.36, 0.75, 0.0, 0.5),
    ),
    info(
        "bridge",
        ProblemKind::Compliance,
        "distributed deck load on a solid deck layer",
        (240, 200, 32, 0.0, 0.775, 0.0, 0.5),
    ),
    info(
        "gripper",
        ProblemKind::Mechanism,
        "half gripper with jaw gap, springs 0.01",
        (150, 75, 14, 0.0, 0.85, -2.0, 0.5),
    ),
    info(
        "michell-multiload",
        ProblemKind::Multiload,
        "two inclined loads at the bottom midpoint, pinned corners",
        (200, 100, 24, 0.0, 0.6, 0.0, 0.5),
    ),
    info(
        "inverter",
        ProblemKind::Mechanism,
        "half force inverter, springs 0.003",
        (100, 50, 10, 0.0, 0.8, -2.0, 0.5),
    ),
    info(
        "heat-sink",
        ProblemKind::Thermal,
        "uniform heat source drained through a left-edge segment",
        (100, 100, 10, 0.0, 0.6, 0.0, 0.5),
    ),
];

const fn info(
    name: &'static str,
    kind: ProblemKind,
    summary: &'static str,
    call: (usize, usize, usize, f64, f64, f64, f64),
) -> ExampleInfo {
    ExampleInfo {
        name,
        kind,
        summary,
        nelx: call.0,
        nely: call.1,
        nsteps: call.2,
        vol0: call.3,
        vol: call.4,
        k: call.5,
        tau: call.6,
    }
}

pub fn example_info(name: &str) -> Result<ExampleInfo> {
    INFO.iter()
        .find(|i| i.name == name)
        .copied()
        .ok_or_else(|| unknown(name))
}

/// Library example used when only a problem kind is given.
pub fn default_example(kind: ProblemKind) -> &'static str {
    match kind {
        ProblemKind::Compliance => "cantilever",
        ProblemKind::Multiload => "michell-multiload",
        ProblemKind::Mechanism => "inverter",
        ProblemKind::Thermal => "heat-sink",
    }
}

fn unknown(name: &str) -> Error {
    Error::UnknownExample {
        name: name.to_string(),
        valid: EXAMPLES.join(", "),
    }
}

/// Port spring stiffness of the gripper.
pub const GRIPPER_SPRING: f64 = 0.01;
/// Port spring stiffness of the inverter.
pub const INVERTER_SPRING: f64 = 0.003;

/// Builds a library example on an `nelx` x `nely` grid.
pub fn example_library(name: &str, nelx: usize, nely: usize) -> Result<ProblemDefinition> {
    let info = example_info(name)?;
    let grid = build_grid(nelx, nely)?;
    let (fx, fy) = (nelx as f64, nely as f64);
    let elastic = Material::Elastic(Isotropic2D::plane_stress(1.0, 0.3));
    let nu = if info.kind == ProblemKind::Thermal { 1 } else { 2 };
    let n = nu * grid.n_nodes();
    let sel = |p: &dyn Fn(f64, f64) -> bool| grid.select_nodes(p);
    let both = |nodes: &[usize]| -> Vec<usize> { nodes.iter().flat_map(|&k| [2 * k, 2 * k + 1]).collect() };
    let xs = |nodes: &[usize]| -> Vec<usize> { node_dofs(nodes, 2, 0).collect() };
    let ys = |nodes: &[usize]| -> Vec<usize> { node_dofs(nodes, 2, 1).collect() };
    let column = |entries: &[(Vec<usize>, f64)]| -> Vec<f64> {
        let mut f = vec![0.0; n];
        for (dofs, v) in entries {
            for &d in dofs {
                f[d] = *v;
            }
        }
        f
    };

    let mut p = ProblemDefinition {
        name: name.to_string(),
        kind: info.kind,
        nelx,
        nely,
        loads: Vec::new(),
        fixed_dofs: Vec::new(),
        active_nodes: Vec::new(),
        passive_nodes: Vec::new(),
        springs: Vec::new(),
        material: elastic,
        law: InterpolationLaw::compliance(),
    };
    match name {
        "cantilever" => {
            let tip = sel(&|x, y| x == fx && y == 0.0);
            p.loads = vec![column(&[(ys(&tip), -0.01 * fx)])];
            p.fixed_dofs = both(&sel(&|x, _| x == 0.0));
        }
        "cantilever-mid" => {
            let tip = sel(&|x, y| y == (0.5 * fy).round() && x == fx);
            p.loads = vec![column(&[(ys(&tip), -0.01 * fx)])];
            p.fixed_dofs = both(&sel(&|x, _| x == 0.0));
        }
        "mbb" => {
            let top_left = sel(&|x, y| y == fy && x == 0.0);
            p.loads = vec![column(&[(ys(&top_left), -0.01 * fx)])];
            p.fixed_dofs = xs(&sel(&|x, _| x == 0.0));
            p.fixed_dofs.extend(ys(&sel(&|x, y| x == fx && y == 0.0)));
        }
        "lshape" => {
            let tip = sel(&|x, y| y == (0.2 * fy).round() && x == fx);
            p.loads = vec![column(&[(ys(&tip), -0.01 * fx)])];
            p.fixed_dofs = both(&sel(&|x, y| x <= 0.4 * fx && y == fy));
            p.passive_nodes = sel(&|x, y| x > (fx * 0.4).ceil() && y > (fy * 0.4).ceil());
        }
        "bridge" => {
            let deck = sel(&|_, y| y == (fy * 1.6 / 5.0).floor());
            p.loads = vec![column(&[(ys(&deck), -0.01 * fx)])];
            p.fixed_dofs = xs(&sel(&|x, _| x == 0.0));
            p.fixed_dofs
                .extend(both(&sel(&|x, y| x >= 5.75 / 6.0 * fx && y == 0.0)));
            p.fixed_dofs
                .extend(ys(&sel(&|x, y| x == fx && y == (fy * 1.5 / 5.0).floor())));
            p.active_nodes = sel(&|_, y| y >= fy * 1.5 / 5.0 && y <= fy * 1.6 / 5.0);
        }
        "gripper" => {
            let input = xs(&sel(&|x, y| y >= 0.9 * fy && x == 0.0));
            let output = ys(&sel(&|x, y| y == (0.9 * fy).round() && x >= 0.9 * fx));
            p.loads = vec![
                column(&[(input.clone(), 0.0001 * fx)]),
                column(&[(output.clone(), 0.0001 * fx)]),
            ];
            p.fixed_dofs = ys(&sel(&|_, y| y == fy));
            p.fixed_dofs.extend(both(&sel(&|x, y| x == 0.0 && y <= 0.1 * fy)));
            p.active_nodes = sel(&|x, y| y > 0.9 * fy && x < 0.05 * fx);
            p.active_nodes
                .extend(sel(&|x, y| y > 0.9 * fy && y <= 0.95 * fy && x >= 0.9 * fx));
            p.passive_nodes = sel(&|x, y| x > 0.8 * fx && x < 0.9 * fx && y > 0.8 * fy);
            p.passive_nodes
                .extend(sel(&|x, y| x >= 0.9 * fx && y > 0.95 * fy));
            p.springs = springs(input.iter().chain(&output), GRIPPER_SPRING);
            p.law = InterpolationLaw::mechanism();
        }
        "michell-multiload" => {
            let mid = sel(&|x, y| y == 0.0 && x == (fx / 2.0).round());
            p.loads = vec![
                column(&[(xs(&mid), -0.01 * fx), (ys(&mid), -2.0 * 0.01 * fx)]),
                column(&[(xs(&mid), 0.01 * fx), (ys(&mid), -2.0 * 0.01 * fx)]),
            ];
            p.fixed_dofs = both(&sel(&|x, y| (x == 0.0 && y == 0.0) || (x == fx && y == 0.0)));
        }
        "inverter" => {
            let input = xs(&sel(&|x, y| y >= 0.9 * fy && x == 0.0));
            let output = xs(&sel(&|x, y| y >= 0.9 * fy && x == fx));
            p.loads = vec![
                column(&[(input.clone(), 0.0001 * fx)]),
                column(&[(output.clone(), -0.0001 * fx)]),
            ];
            p.fixed_dofs = ys(&sel(&|_, y| y == fy));
            p.fixed_dofs.extend(both(&sel(&|x, y| x == 0.0 && y <= 0.1 * fy)));
            p.active_nodes = sel(&|x, y| y > 0.9 * fy && (x < 0.05 * fx || x > 0.95 * fx));
            p.springs = springs(input.iter().chain(&output), INVERTER_SPRING);
            p.law = InterpolationLaw::mechanism();
        }
        "heat-sink" => {
            let sink = sel(&|x, y| x == 0.0 && y >= 0.45 * fy && y <= 0.55 * fy);
            let mut q = vec![0.01; n];
            for &k in &sink {
                q[k] = 0.0;
            }
            p.loads = vec![q];
            p.fixed_dofs = sink;
            p.material = Material::Thermal(ThermalMaterial::isotropic(1.0));
            p.law = InterpolationLaw::new(5.0, 1e-3)?;
        }
        _ => return Err(unknown(name)),
    }
    p.fixed_dofs.sort_unstable();
    p.fixed_dofs.dedup();
    p.validate()?;
    Ok(p)
}

fn springs<'a>(dofs: impl Iterator<Item = &'a usize>, stiffness: f64) -> Vec<Spring> {
    dofs.map(|&dof| Spring { dof, stiffness }).collect()
}
