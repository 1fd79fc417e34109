use std::sync::Arc;

use chiral_potts::model::{build_hamiltonian, build_translation};
use chiral_potts::sectors::{build_all_sectors, build_sector, enumerate_orbits, project_hamiltonian, OrbitTable};
use chiral_potts::spectra::{
    assemble_simultaneous, assemble_simultaneous_oracle, compare_routes, diagonalize_sector, select_ground_states,
};
use chiral_potts::{inner, ModelParams, Tolerances, C64};
use nalgebra::DMatrix;

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn orbit_counts() {
    let p = ModelParams::new(2, 2, 0.0).unwrap();
    let periods: Vec<usize> = enumerate_orbits(&p).iter().map(|o| o.period).collect();
    assert_eq!(periods, vec![1, 2, 1]);

    let p = ModelParams::new(2, 3, 0.0).unwrap();
    let mut periods: Vec<usize> = enumerate_orbits(&p).iter().map(|o| o.period).collect();
    periods.sort_unstable();
    assert_eq!(periods, vec![1, 1, 3, 3]);

    let p = ModelParams::new(3, 5, 0.0).unwrap();
    let orbits = enumerate_orbits(&p);
    assert_eq!(orbits.iter().map(|o| o.period).sum::<usize>(), 243);
    let mut seen = vec![false; 243];
    for o in &orbits {
        for &c in &o.members {
            assert!(!seen[c]);
            seen[c] = true;
        }
    }
}

#[test]
fn sector_dimensions() {
    let p = ModelParams::new(2, 2, 0.0).unwrap();
    let dims: Vec<usize> = build_all_sectors(&p).unwrap().iter().map(|s| s.dimension()).collect();
    assert_eq!(dims, vec![3, 1]);
    for (n, l) in [(3, 4), (2, 6), (4, 3), (3, 5)] {
        let p = ModelParams::new(n, l, 0.0).unwrap();
        let total: usize = build_all_sectors(&p).unwrap().iter().map(|s| s.dimension()).sum();
        assert_eq!(total, p.dim());
    }
    let table = Arc::new(OrbitTable::new(&p));
    assert!(build_sector(5, &table).is_err());
}

#[test]
fn sector_vectors_carry_their_momentum() {
    let p = ModelParams::new(3, 4, 0.0).unwrap();
    let t = build_translation(&p);
    for s in build_all_sectors(&p).unwrap() {
        let tau = s.eigenvalue();
        for a in 0..s.dimension() {
            let v = s.basis_vector(a);
            let tv = t.apply(&v);
            let err: f64 = tv.iter().zip(&v).map(|(x, y)| (x - tau * y).norm_sqr()).sum();
            assert!(err.sqrt() <= 1e-12);
            assert!((inner(&v, &v).re - 1.0).abs() <= 1e-13);
        }
    }
}

#[test]
fn classical_sector_blocks_are_diagonal() {
    let p = ModelParams::new(3, 4, 0.0).unwrap();
    let h = build_hamiltonian(&p).unwrap().h;
    for s in build_all_sectors(&p).unwrap() {
        let m = project_hamiltonian(&h, &s, 1e-12).unwrap();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if i != j {
                    assert!(m[(i, j)].norm() <= 1e-14);
                }
            }
        }
    }
}

#[test]
fn sector_spectra_cover_the_dense_spectrum() {
    let p = ModelParams::new(3, 4, 0.5).unwrap();
    let h = build_hamiltonian(&p).unwrap().h;
    let mut from_sectors = Vec::new();
    for s in build_all_sectors(&p).unwrap() {
        from_sectors.extend(diagonalize_sector(&project_hamiltonian(&h, &s, 1e-12).unwrap()).unwrap().values);
    }
    let dense = diagonalize_sector(&h.to_dense()).unwrap().values;
    for (a, b) in sorted(from_sectors).iter().zip(&dense) {
        assert!((a - b).abs() <= 1e-9);
    }
}

#[test]
fn two_site_ising_zero_momentum() {
    let p = ModelParams::new(2, 2, 0.7).unwrap();
    let h = build_hamiltonian(&p).unwrap().h;
    let k0 = &build_all_sectors(&p).unwrap()[0];
    let got = diagonalize_sector(&project_hamiltonian(&h, k0, 1e-12).unwrap()).unwrap().values;
    // k = 0 block of the 4x4 matrix: everything except the antisymmetric (|01> − |10>)/√2, energy 2
    let dense = diagonalize_sector(&h.to_dense()).unwrap().values;
    let mut rest = dense.clone();
    let pos = rest.iter().position(|e| (e - 2.0).abs() < 1e-12).unwrap();
    rest.remove(pos);
    for (a, b) in got.iter().zip(&rest) {
        assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn small_eigensolves() {
    let one = DMatrix::from_element(1, 1, C64::new(-3.5, 0.0));
    let e = diagonalize_sector(&one).unwrap();
    assert_eq!(e.values, vec![-3.5]);

    let p = ModelParams::new(2, 2, 0.0).unwrap();
    let h = build_hamiltonian(&p).unwrap().h;
    let e = diagonalize_sector(&h.to_dense()).unwrap().values;
    for (a, b) in e.iter().zip([-2.0, -2.0, 2.0, 2.0]) {
        assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn every_vector_is_certified() {
    let p = ModelParams::new(3, 3, 0.5).unwrap();
    let bundle = build_hamiltonian(&p).unwrap();
    let t = build_translation(&p);
    let report = assemble_simultaneous(&p, &bundle, &t).unwrap();
    assert_eq!(report.eigenvectors.len(), 27);
    for ev in &report.eigenvectors {
        assert!(ev.residuals.t_residual <= 1e-10);
        assert!(ev.residuals.h_residual <= 1e-10 * (1.0 + ev.energy.abs()));
        assert!(ev.residuals.q_residual <= 1e-10);
    }
    let evs = &report.eigenvectors;
    for i in 0..evs.len() {
        for j in 0..i {
            assert!(inner(&evs[i].vector, &evs[j].vector).norm() <= 1e-12);
        }
    }
}

#[test]
fn routes_agree() {
    let tol = Tolerances::default();
    for (n, l, lambda) in [(3, 4, 0.5), (2, 5, 1.0), (3, 3, 1.75), (2, 4, 0.0)] {
        let p = ModelParams::new(n, l, lambda).unwrap();
        let bundle = build_hamiltonian(&p).unwrap();
        let t = build_translation(&p);
        let a = assemble_simultaneous(&p, &bundle, &t).unwrap();
        let b = assemble_simultaneous_oracle(&p, &bundle, &t).unwrap();
        let cmp = compare_routes(&a, &b, &tol);
        assert!(cmp.agrees(tol.cross_route), "N={n} L={l} λ={lambda}: {cmp:?}");
    }
}

#[test]
fn degenerate_classical_ground_level() {
    let p = ModelParams::new(2, 2, 0.0).unwrap();
    let bundle = build_hamiltonian(&p).unwrap();
    let t = build_translation(&p);
    let report = assemble_simultaneous(&p, &bundle, &t).unwrap();
    let ground = select_ground_states(&report);
    assert_eq!(ground.len(), 2);
    assert!(ground.iter().all(|g| g.momentum == 0 && (g.energy + 2.0).abs() < 1e-12));
    assert!(inner(&ground[0].vector, &ground[1].vector).norm() <= 1e-12);

    let p = ModelParams::new(3, 4, 0.5).unwrap();
    let bundle = build_hamiltonian(&p).unwrap();
    let report = assemble_simultaneous(&p, &bundle, &build_translation(&p)).unwrap();
    assert_eq!(select_ground_states(&report).len(), 1);
}
