use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use hphase::fock::{rep_matrix, TruncatedBasis};
use hphase::fourier::{gft, inverse_gft, LambdaGrid};
use hphase::lp::{build_partition, lp_project};
use hphase::weyl::{moyal_poly, Poly2};
use hphase::HeisenbergPoint;
use hphase_bench::{gaussian, gaussian_spectral};

fn transforms(c: &mut Criterion) {
    let f = gaussian(32);
    let lg = LambdaGrid::geometric(1, 32, 1e-3, 8.0).unwrap();
    c.bench_function("gft 32³ N=16 λ=64", |b| b.iter(|| gft(black_box(&f), &lg, 16).unwrap()));
    let spec = gft(&f, &lg, 16).unwrap();
    c.bench_function("inverse_gft 32³ N=16 λ=64", |b| b.iter(|| inverse_gft(black_box(&spec), &f.grid).unwrap()));
}

fn representation(c: &mut Criterion) {
    let basis = TruncatedBasis::new(1, 32, 1.0).unwrap();
    let w = HeisenbergPoint::new1(0.4, -0.7, 0.3);
    c.bench_function("rep_matrix N=32", |b| b.iter(|| rep_matrix(black_box(&w), &basis).unwrap()));
}

fn littlewood_paley(c: &mut Criterion) {
    let part = build_partition();
    let spec = gaussian_spectral(32, 64, 32);
    c.bench_function("lp_project p=2 N=32", |b| b.iter(|| lp_project(&part, black_box(&spec), 2)));
}

fn moyal(c: &mut Criterion) {
    let h = Poly2::harmonic();
    let p = h.mul(&h).add(&Poly2::xi());
    c.bench_function("moyal_poly deg 4", |b| b.iter(|| moyal_poly(black_box(&p), black_box(&p))));
}

criterion_group!(benches, transforms, representation, littlewood_paley, moyal);
criterion_main!(benches);
