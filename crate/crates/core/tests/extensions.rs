use std::sync::Arc;

use num_traits::Signed;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use translen::expr::{Bindings, Expr};
use translen::extension::{ext_mult, ext_power, q_alpha, validate_cocycle, Coboundary, Cocycle, ExtensionGroup, HeisenbergCocycle, ZeroCocycle};
use translen::group::{random_element, word_ball, Element, GroupOracle, Heisenberg, Lattice};
use translen::rational::{q, qi};
use translen::{Error, Q, Result};

type Triple = (Element, Element, Element);

fn triples(base: &dyn GroupOracle, count: usize, seed: u64) -> Vec<Triple> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (
                random_element(base, &mut rng, 10).unwrap(),
                random_element(base, &mut rng, 10).unwrap(),
                random_element(base, &mut rng, 10).unwrap(),
            )
        })
        .collect()
}

fn floor_coboundary(eps: Q) -> Arc<dyn Cocycle> {
    let mut b = Bindings::new();
    b.insert("eps".into(), eps);
    Arc::new(Coboundary::new(Arc::new(Lattice::new(1)), Expr::parse("floor(eps*p)").unwrap(), b, Some(qi(1))).unwrap())
}

fn shipped() -> Vec<Arc<dyn Cocycle>> {
    vec![
        Arc::new(ZeroCocycle::new(Arc::new(Lattice::new(2)))),
        floor_coboundary(q(2, 5)),
        floor_coboundary(q(408, 985)),
        Arc::new(HeisenbergCocycle::default()),
    ]
}

/// Normalised but not a cocycle: `a(g, h) = g^2 h` on `Z`.
struct Skewed(Arc<dyn GroupOracle>);

impl Cocycle for Skewed {
    fn id(&self) -> String {
        "skewed".into()
    }
    fn base(&self) -> &Arc<dyn GroupOracle> {
        &self.0
    }
    fn alpha(&self, g: &Element, h: &Element) -> Result<i64> {
        let (a, b) = (self.0.abelian_coordinates(g).unwrap()[0], self.0.abelian_coordinates(h).unwrap()[0]);
        Ok(a * a * b)
    }
    fn declared_bound(&self) -> Option<Q> {
        None
    }
}

fn associative(ext: &ExtensionGroup, (g, h, k): &Triple) -> bool {
    let l = |x: &Element| ExtensionGroup::elem(x.clone(), 0);
    let left = ext_mult(ext, &ext_mult(ext, &l(g), &l(h)).unwrap(), &l(k)).unwrap();
    let right = ext_mult(ext, &l(g), &ext_mult(ext, &l(h), &l(k)).unwrap()).unwrap();
    left == right
}

fn identity_holds(c: &dyn Cocycle, (g, h, k): &Triple) -> bool {
    let b = c.base();
    let (gh, hk) = (b.multiply(g, h).unwrap(), b.multiply(h, k).unwrap());
    c.alpha(g, h).unwrap() + c.alpha(&gh, k).unwrap() == c.alpha(h, k).unwrap() + c.alpha(g, &hk).unwrap()
}

#[test]
fn associativity_iff_cocycle_identity() {
    for c in shipped() {
        let ext = ExtensionGroup::new(c.clone(), true).unwrap();
        let ts = triples(ext.base().as_ref(), 10_000, 1);
        let report = validate_cocycle(&ext, &ts).unwrap();
        assert_eq!(report.triples_checked, 10_000);
        assert!(report.bound_respected, "{}", c.id());
    }
    let skewed: Arc<dyn Cocycle> = Arc::new(Skewed(Arc::new(Lattice::new(1))));
    let ext = ExtensionGroup::new(skewed.clone(), true).unwrap();
    let ts = triples(ext.base().as_ref(), 2_000, 2);
    let mut failures = 0;
    for t in &ts {
        assert_eq!(associative(&ext, t), identity_holds(skewed.as_ref(), t), "{t:?}");
        failures += usize::from(!identity_holds(skewed.as_ref(), t));
    }
    assert!(failures > 0);
    assert!(matches!(validate_cocycle(&ext, &ts), Err(Error::CocycleIdentityFailure(..))));
}

#[test]
fn projection_is_a_homomorphism_and_kernel_is_z() {
    for c in shipped() {
        let ext = ExtensionGroup::new(c, true).unwrap();
        let base = ext.base().clone();
        for (g, h, p) in triples(base.as_ref(), 500, 5) {
            let pz = q_alpha(&ExtensionGroup::elem(p.clone(), 0)).unwrap();
            let (eg, eh) = (ExtensionGroup::elem(g.clone(), 3), ExtensionGroup::elem(h.clone(), pz));
            assert_eq!(ext.project(&ext_mult(&ext, &eg, &eh).unwrap()).unwrap(), base.multiply(&g, &h).unwrap());
        }
        for n in -20..=20 {
            let tn = ext_power(&ext, &ext.t(), n).unwrap();
            assert!(base.is_identity(&ext.project(&tn).unwrap()));
            assert_eq!(q_alpha(&tn).unwrap(), n);
        }
    }
}

#[test]
fn q_alpha_defect_is_the_declared_bound() {
    for c in shipped().into_iter().filter(|c| c.declared_bound().is_some() && c.id() != "heisenberg") {
        let ext = ExtensionGroup::new(c.clone(), true).unwrap();
        let bound = c.declared_bound().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..2_000 {
            let a = random_element(&ext, &mut rng, 16).unwrap();
            let b = random_element(&ext, &mut rng, 16).unwrap();
            let d = qi(q_alpha(&ext_mult(&ext, &a, &b).unwrap()).unwrap() - q_alpha(&a).unwrap() - q_alpha(&b).unwrap());
            assert!(d.abs() <= bound, "{}", c.id());
        }
    }
}

#[test]
fn heisenberg_law_is_the_extension_law_on_radius_five() {
    let h = Heisenberg::new();
    let ext = ExtensionGroup::new(Arc::new(HeisenbergCocycle::default()), false).unwrap();
    let f = |e: &Element| match e {
        Element::Heisenberg(x) => ExtensionGroup::elem(Lattice::new(2).vector(&[x.x, x.y]), x.z + x.x * x.y),
        _ => unreachable!(),
    };
    let hb = word_ball(&h, 5, 10_000_000).unwrap();
    let eb = word_ball(&ext, 5, 10_000_000).unwrap();
    assert_eq!(hb.len(), eb.len());
    let mut images = std::collections::BTreeSet::new();
    for (g, d) in hb.iter() {
        let key = ext.canonical_key(&f(g)).unwrap();
        assert_eq!(eb.distance_of_key(&key), Some(d), "{g}");
        assert!(images.insert(key));
    }
    // the commutator [x, y] is t
    let (x, y) = (Heisenberg::elem(1, 0, 0), Heisenberg::elem(0, 1, 0));
    let comm = translen::group::commutator(&h, &x, &y).unwrap();
    assert_eq!(f(&comm), ext.t());
}
