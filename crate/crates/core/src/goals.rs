//! Goal unitaries.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::fidelity::SubgroupGoal;
use crate::spin::{drift_diagonal, SizeCap, SpinSystem, Subgroup};
use crate::unitary::Unitary;
use crate::{Error, Result, C64};

/// Rotation axis: a Pauli axis or an in-plane direction `cos(t) X + sin(t) Y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Axis {
    X,
    Y,
    Z,
    InPlane(f64),
}

/// Simultaneous rotation by `angle` about `axis` on every target spin.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationGoal {
    /// 0-based spin indices.
    pub targets: Vec<usize>,
    pub axis: Axis,
    pub angle: f64,
}

/// `exp(-i angle sigma_axis / 2)`.
pub fn single_rotation(axis: Axis, angle: f64) -> Unitary {
    let (c, s) = (libm::cos(angle / 2.0), libm::sin(angle / 2.0));
    let z = C64::new(0.0, 0.0);
    let m = match axis {
        Axis::Z => [C64::new(c, -s), z, z, C64::new(c, s)],
        Axis::X => Axis::InPlane(0.0).entries(c, s),
        Axis::Y => Axis::InPlane(core::f64::consts::FRAC_PI_2).entries(c, s),
        Axis::InPlane(_) => axis.entries(c, s),
    };
    Unitary::from_matrix(DMatrix::from_row_slice(2, 2, &m)).expect("2x2")
}

impl Axis {
    fn entries(self, c: f64, s: f64) -> [C64; 4] {
        let Axis::InPlane(t) = self else { unreachable!() };
        // -i s (cos t X + sin t Y) = [[0, -i s e^{-it}], [-i s e^{it}, 0]]
        let off = |sign: f64| C64::new(0.0, -s) * C64::new(libm::cos(t), sign * libm::sin(t));
        [C64::new(c, 0.0), off(-1.0), off(1.0), C64::new(c, 0.0)]
    }
}

/// Tensor product of the rotation on targets and identity elsewhere, for a
/// `q`-spin register (spin 0 most significant).
pub fn rotation_goal(q: usize, goal: &RotationGoal) -> Result<Unitary> {
    if goal.targets.is_empty() {
        return Err(Error::EmptySubgroup);
    }
    Subgroup::new(goal.targets.clone(), q)?;
    let rot = single_rotation(goal.axis, goal.angle);
    let id = Unitary::identity(2);
    let mut out = Unitary::identity(1);
    for k in 0..q {
        out = out.kron(if goal.targets.contains(&k) { &rot } else { &id });
    }
    Ok(out)
}

/// Validated goal from `dim * dim` row-major entries.
pub fn goal_from_entries(dim: usize, entries: &[C64]) -> Result<Unitary> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::InvalidConfig(alloc::format!("goal dimension {dim} is not a power of two")));
    }
    if entries.len() != dim * dim {
        return Err(Error::DimensionMismatch { expected: dim * dim, got: entries.len() });
    }
    Unitary::checked(DMatrix::from_row_slice(dim, dim, entries), 1e-6)
}

/// For each subgroup, the rotation on its members whose global 1-based index
/// is odd (0-based even); identity when there are none.
pub fn odd_spin_rotation_goals(subgroups: &[Subgroup], angle: f64, axis: Axis) -> Vec<SubgroupGoal> {
    subgroups
        .iter()
        .map(|sg| {
            let targets: Vec<usize> =
                sg.indices().iter().enumerate().filter(|(_, &g)| g % 2 == 0).map(|(local, _)| local).collect();
            let goal = if targets.is_empty() {
                Unitary::identity(1 << sg.len())
            } else {
                rotation_goal(sg.len(), &RotationGoal { targets, axis, angle }).expect("local targets are valid")
            };
            SubgroupGoal { subgroup: sg.clone(), goal }
        })
        .collect()
}

/// Free evolution `exp(-i H0 T)`.
pub fn drift_goal(system: &SpinSystem, duration: f64, cap: SizeCap) -> Result<Unitary> {
    let d = drift_diagonal(system, cap)?;
    let diag: Vec<C64> = d.iter().map(|h| C64::new(libm::cos(-h * duration), libm::sin(-h * duration))).collect();
    Ok(Unitary::from_diagonal(&diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::unitary::pauli_x;
    use core::f64::consts::{FRAC_1_SQRT_2, PI};
    use proptest::prelude::*;

    #[test]
    fn y_quarter_turn() {
        let u = rotation_goal(1, &RotationGoal { targets: alloc::vec![0], axis: Axis::Y, angle: PI / 2.0 }).unwrap();
        let r = FRAC_1_SQRT_2;
        let want = [[r, -r], [r, r]];
        for (i, row) in want.iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                assert!((u.matrix()[(i, j)] - C64::new(w, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_angle_is_identity() {
        let u = rotation_goal(3, &RotationGoal { targets: alloc::vec![0, 2], axis: Axis::InPlane(0.3), angle: 0.0 })
            .unwrap();
        assert!(u.max_distance(&Unitary::identity(8)) < 1e-15);
    }

    #[test]
    fn double_x_pi() {
        let u = rotation_goal(2, &RotationGoal { targets: alloc::vec![0, 1], axis: Axis::X, angle: PI }).unwrap();
        let xx = pauli_x().kronecker(&pauli_x()) * C64::new(-1.0, 0.0);
        assert!(u.max_distance(&Unitary::from_matrix(xx).unwrap()) < 1e-15);
    }

    #[test]
    fn bad_targets() {
        assert!(rotation_goal(2, &RotationGoal { targets: alloc::vec![2], axis: Axis::X, angle: 1.0 }).is_err());
        assert!(rotation_goal(2, &RotationGoal { targets: alloc::vec![], axis: Axis::X, angle: 1.0 }).is_err());
    }

    #[test]
    fn goal_entries_validation() {
        let o = C64::new(1.0, 0.0);
        let z = C64::new(0.0, 0.0);
        assert_eq!(goal_from_entries(2, &[o, z, z, o]).unwrap(), Unitary::identity(2));
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        assert!(goal_from_entries(2, &[h, h, h, -h]).is_ok());
        assert!(matches!(goal_from_entries(2, &[o * 2.0, z, z, o]), Err(Error::NotUnitary { .. })));
        assert!(goal_from_entries(3, &[o; 9]).is_err());
        assert!(goal_from_entries(2, &[o; 3]).is_err());
    }

    #[test]
    fn odd_spin_selection() {
        let sg = Subgroup::new(alloc::vec![2, 3], 4).unwrap(); // global spins 3 and 4
        let goals = odd_spin_rotation_goals(&[sg], PI / 2.0, Axis::X);
        let want = rotation_goal(2, &RotationGoal { targets: alloc::vec![0], axis: Axis::X, angle: PI / 2.0 }).unwrap();
        assert_eq!(goals[0].goal, want);

        let even_only = Subgroup::new(alloc::vec![1, 3], 4).unwrap();
        let goals = odd_spin_rotation_goals(&[even_only], PI / 2.0, Axis::X);
        assert_eq!(goals[0].goal, Unitary::identity(4));

        let tiles = crate::spin::lattice_tiling(4, 4);
        let goals = odd_spin_rotation_goals(&tiles, PI / 2.0, Axis::X);
        let mut rotated: Vec<usize> = goals
            .iter()
            .flat_map(|g| g.subgroup.indices().iter().copied().filter(|i| i % 2 == 0).collect::<Vec<_>>())
            .collect();
        rotated.sort_unstable();
        rotated.dedup();
        assert_eq!(rotated.len(), 8);
    }

    proptest! {
        #[test]
        fn rotation_properties(angle in -7.0f64..7.0, t in 0.0f64..6.3, q in 1usize..4, mask in 1usize..8) {
            let targets: Vec<usize> = (0..q).filter(|k| mask >> k & 1 == 1).collect();
            prop_assume!(!targets.is_empty());
            let g = RotationGoal { targets: targets.clone(), axis: Axis::InPlane(t), angle };
            let u = rotation_goal(q, &g).unwrap();
            prop_assert!(u.unitarity_deviation() < 1e-12);
            let inv = rotation_goal(q, &RotationGoal { angle: -angle, ..g }).unwrap();
            prop_assert!((&u * &inv).max_distance(&Unitary::identity(1 << q)) < 1e-12);
        }

        #[test]
        fn disjoint_rotations_commute(a in -4.0f64..4.0, b in -4.0f64..4.0) {
            let u = rotation_goal(3, &RotationGoal { targets: alloc::vec![0], axis: Axis::X, angle: a }).unwrap();
            let v = rotation_goal(3, &RotationGoal { targets: alloc::vec![1, 2], axis: Axis::Y, angle: b }).unwrap();
            prop_assert!((&u * &v).max_distance(&(&v * &u)) < 1e-12);
        }
    }
}
