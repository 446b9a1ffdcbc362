//! Gram parameterisation of the positive operator cone.

use lkdual::polyalg::IntervalGrid;
use lkdual::sdp::SdpProblem;
use lkdual::selftest::{gram_pointwise, xi_positivity, SelftestConfig};
use lkdual::soscone::{
    bivariate_basis, make_xi_member, monomial_basis, BasisDescriptor, Weight, XiOptions,
};

#[test]
fn basis_sizes() {
    for d in 0..5u32 {
        assert_eq!(monomial_basis(d).len(), d as usize + 1);
        let z = bivariate_basis(d);
        let desc = BasisDescriptor::new(d, 2, 3);
        assert_eq!(z.len(), desc.q());
        assert!(z.iter().all(|m| m.degree() <= d));
        assert_eq!(desc.y1_dim(), 2 * (d as usize + 1));
        assert_eq!(desc.y2_dim(), 2 * desc.q() * 3);
    }
}

#[test]
fn interval_weight_is_nonnegative_exactly_on_its_interval() {
    let grid = IntervalGrid::new(&[0.4, 1.0, 2.5]).unwrap();
    for l in 0..grid.len() {
        let g = Weight::Interval.polynomial(&grid, l);
        let (a, b) = grid.interval(l);
        for k in 0..=20 {
            let s = a + (b - a) * k as f64 / 20.0;
            assert!(g.evaluate(s, 0.0, &[]).unwrap()[(0, 0)] >= -1e-15);
        }
        assert!(g.evaluate(a - 0.1, 0.0, &[]).unwrap()[(0, 0)] < 0.0);
        assert!(g.evaluate(b + 0.1, 0.0, &[]).unwrap()[(0, 0)] < 0.0);
    }
}

#[test]
fn cone_member_registers_one_block_per_interval_and_weight() {
    let grid = IntervalGrid::new(&[1.0, 2.0]).unwrap();
    for reduced in [false, true] {
        let mut p = SdpProblem::new();
        let xi = make_xi_member(
            &mut p,
            1,
            2,
            &grid,
            XiOptions {
                reduced_second_block: reduced,
            },
        )
        .unwrap();
        let desc = BasisDescriptor::new(1, 2, 2);
        let full = desc.y1_dim() + desc.y2_dim();
        let second = if reduced { desc.y1_dim() } else { full };
        let sizes: Vec<usize> = p.blocks().iter().map(|b| b.size).collect();
        assert_eq!(sizes, vec![full, full, second, second]);
        assert_eq!(xi.op.dim(), 2);
    }
}

#[test]
fn gram_expansion_matches_pointwise_formula() {
    let o = gram_pointwise(&SelftestConfig {
        seed: 11,
        ..SelftestConfig::default()
    })
    .unwrap();
    assert!(o.passed, "{o:?}");
}

#[test]
fn cone_members_are_positive() {
    let o = xi_positivity(&SelftestConfig {
        seed: 12,
        ..SelftestConfig::default()
    })
    .unwrap();
    assert!(o.passed, "{o:?}");
    assert_eq!(o.cases, 600);
}
