//! Name-based lookup of groups, cocycles and quasimorphisms.
//!
//! A spec string is `"<kind>"` or `"<kind>:<argument>"`; the kind selects a
//! registered factory and the argument is passed through unparsed.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr};
use crate::extension::{Coboundary, Cocycle, CocycleSpec, ExtensionGroup, HeisenbergCocycle, ZeroCocycle};
use crate::hhg::{make_trivial_z, make_z2_coordinate, make_z2_delta_epsilon, make_z2_epsilon, ToyHHGStructure};
use crate::group::{FreeGroup, FreeWord, GroupOracle, Heisenberg, Lattice};
use crate::quasimorphism::{brooks, LinearHom, Quasimorphism};
use crate::rational::{parse_q, Q};

pub type GroupFactory = Arc<dyn Fn(&str, &Registry) -> Result<Arc<dyn GroupOracle>> + Send + Sync>;
pub type CocycleFactory =
    Arc<dyn Fn(&CocycleSpec, Arc<dyn GroupOracle>, &Registry) -> Result<Arc<dyn Cocycle>> + Send + Sync>;
pub type QuasimorphismFactory =
    Arc<dyn Fn(&str, &dyn GroupOracle) -> Result<Arc<dyn Quasimorphism>> + Send + Sync>;
pub type StructureFactory = Arc<dyn Fn(&str, &Registry) -> Result<ToyHHGStructure> + Send + Sync>;

#[derive(Clone, Default)]
pub struct Registry {
    groups: BTreeMap<String, GroupFactory>,
    cocycles: BTreeMap<String, CocycleFactory>,
    quasimorphisms: BTreeMap<String, QuasimorphismFactory>,
    structures: BTreeMap<String, StructureFactory>,
    /// Named constants (such as `eps`) visible to cocycle expressions.
    pub params: Bindings,
}

fn split(spec: &str) -> (&str, &str) {
    match spec.split_once(':') {
        Some((k, a)) => (k.trim(), a.trim()),
        None => (spec.trim(), ""),
    }
}

fn rank_arg(arg: &str, kind: &str) -> Result<usize> {
    let r: usize = arg.parse().map_err(|_| Error::UnknownGroup(format!("{kind}:{arg}")))?;
    if !(1..=8).contains(&r) {
        return Err(Error::UnknownGroup(format!("{kind}:{arg}")));
    }
    Ok(r)
}

impl Registry {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn register_group(&mut self, kind: &str, f: GroupFactory) {
        self.groups.insert(kind.into(), f);
    }

    pub fn register_cocycle(&mut self, kind: &str, f: CocycleFactory) {
        self.cocycles.insert(kind.into(), f);
    }

    pub fn register_quasimorphism(&mut self, kind: &str, f: QuasimorphismFactory) {
        self.quasimorphisms.insert(kind.into(), f);
    }

    pub fn register_structure(&mut self, kind: &str, f: StructureFactory) {
        self.structures.insert(kind.into(), f);
    }

    pub fn structure_kinds(&self) -> Vec<&str> {
        self.structures.keys().map(String::as_str).collect()
    }

    pub fn group_kinds(&self) -> Vec<&str> {
        self.groups.keys().map(String::as_str).collect()
    }

    pub fn group(&self, spec: &str) -> Result<Arc<dyn GroupOracle>> {
        let (kind, arg) = split(spec);
        let f = self.groups.get(kind).ok_or_else(|| Error::UnknownGroup(spec.into()))?;
        f(arg, self)
    }

    pub fn cocycle(&self, spec: &CocycleSpec) -> Result<Arc<dyn Cocycle>> {
        let f = self.cocycles.get(&spec.kind).ok_or_else(|| Error::UnknownCocycle(spec.kind.clone()))?;
        let default_base = if spec.kind == "heisenberg" { "lattice:2" } else { "lattice:1" };
        let base = self.group(spec.base.as_deref().unwrap_or(default_base))?;
        f(spec, base, self)
    }

    pub fn quasimorphism(&self, spec: &str, group: &dyn GroupOracle) -> Result<Arc<dyn Quasimorphism>> {
        let (kind, arg) = split(spec);
        let f = self.quasimorphisms.get(kind).ok_or_else(|| Error::Input(format!("unknown quasimorphism {spec:?}")))?;
        f(arg, group)
    }

    pub fn structure(&self, spec: &str) -> Result<ToyHHGStructure> {
        let (kind, arg) = split(spec);
        let f = self.structures.get(kind).ok_or_else(|| Error::Input(format!("unknown structure {spec:?}")))?;
        f(arg, self)
    }

    /// Free groups, lattices, the Heisenberg group, cocycle extensions, the three
    /// shipped cocycles, Brooks quasimorphisms and linear homomorphisms.
    pub fn with_defaults() -> Self {
        let mut r = Registry::empty();
        r.register_group("free", Arc::new(|a, _| Ok(Arc::new(FreeGroup::new(rank_arg(a, "free")?)))));
        r.register_group("lattice", Arc::new(|a, _| Ok(Arc::new(Lattice::new(rank_arg(a, "lattice")?)))));
        r.register_group(
            "heisenberg",
            Arc::new(|a, _| {
                if !a.is_empty() {
                    return Err(Error::UnknownGroup(format!("heisenberg:{a}")));
                }
                Ok(Arc::new(Heisenberg::new()))
            }),
        );
        r.register_group(
            "extension",
            Arc::new(|a, reg| {
                let spec = CocycleSpec::parse(a)?;
                let c = reg.cocycle(&spec)?;
                // t is the commutator [x,y] in the Heisenberg case, so it is not a generator
                Ok(Arc::new(ExtensionGroup::new(c, spec.kind != "heisenberg")?))
            }),
        );
        r.register_cocycle("zero", Arc::new(|_, base, _| Ok(Arc::new(ZeroCocycle::new(base)))));
        r.register_cocycle(
            "heisenberg",
            Arc::new(|_, base, _| {
                if base.name() != "lattice:2" {
                    return Err(Error::Input("the Heisenberg cocycle lives on lattice:2".into()));
                }
                Ok(Arc::new(HeisenbergCocycle::default()))
            }),
        );
        r.register_cocycle(
            "coboundary",
            Arc::new(|spec, base, reg| {
                let beta = spec.beta.as_deref().ok_or_else(|| Error::Input("coboundary needs beta".into()))?;
                let bound = spec.bound.as_deref().map(parse_q).transpose()?;
                Ok(Arc::new(Coboundary::new(base, Expr::parse(beta)?, reg.params.clone(), bound)?))
            }),
        );
        r.register_quasimorphism(
            "brooks",
            Arc::new(|a, g| {
                let rank = g.generators().len() / 2;
                Ok(Arc::new(brooks(&FreeWord::parse(a, rank)?)?))
            }),
        );
        r.register_quasimorphism(
            "linear",
            Arc::new(|a, _| {
                let c = a.split(',').map(parse_q).collect::<Result<Vec<Q>>>()?;
                Ok(Arc::new(LinearHom::new(c)))
            }),
        );
        r.register_structure("z2_epsilon", Arc::new(|a, _| make_z2_epsilon(&parse_q(a)?)));
        r.register_structure(
            "z2_delta_epsilon",
            Arc::new(|a, _| {
                let (d, e) = a.split_once(',').ok_or_else(|| Error::Input("expected z2_delta_epsilon:<delta>,<eps>".into()))?;
                make_z2_delta_epsilon(&parse_q(d.trim())?, &parse_q(e.trim())?)
            }),
        );
        r.register_structure("z2_coordinate", Arc::new(|_, _| make_z2_coordinate()));
        r.register_structure("trivial_z", Arc::new(|_, _| make_trivial_z()));
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    #[test]
    fn resolves_shipped_groups() {
        let r = Registry::with_defaults();
        assert_eq!(r.group("free:2").unwrap().name(), "free:2");
        assert_eq!(r.group("lattice:2").unwrap().name(), "lattice:2");
        assert_eq!(r.group("heisenberg").unwrap().name(), "heisenberg");
        assert!(matches!(r.group("baumslag:1"), Err(Error::UnknownGroup(_))));
        assert!(matches!(r.group("free:0"), Err(Error::UnknownGroup(_))));
    }

    #[test]
    fn extension_groups_by_cocycle() {
        let mut r = Registry::with_defaults();
        r.params.insert("eps".into(), q(2, 5));
        let e = r.group("extension:heisenberg").unwrap();
        assert_eq!(e.generators().len(), 4);
        let e = r.group("extension:coboundary:floor(eps*p)|1").unwrap();
        // lifts of a^-1 pick up a(a, a^-1) = 1, so the inverses are added separately
        assert_eq!(e.generators().len(), 6);
        for s in e.generators() {
            assert!(e.generators().contains(&e.invert(s).unwrap()));
        }
        let g = e.parse_element("(a^5; 0)").unwrap();
        assert_eq!(e.canonical_key(&g).unwrap(), e.canonical_key(&e.parse_element("(a^5; 0)").unwrap()).unwrap());
        assert!(matches!(r.group("extension:nope"), Err(Error::UnknownCocycle(_))));
    }

    #[test]
    fn custom_factories_are_selected_at_runtime() {
        let mut r = Registry::empty();
        r.register_group("z", Arc::new(|_, _| Ok(Arc::new(Lattice::new(1)))));
        assert_eq!(r.group_kinds(), vec!["z"]);
        assert_eq!(r.group("z").unwrap().name(), "lattice:1");
        assert!(r.group("lattice:1").is_err());
    }

    #[test]
    fn structures_by_name() {
        let r = Registry::with_defaults();
        assert_eq!(r.structure("z2_epsilon:1/3").unwrap().domains.len(), 3);
        assert!(matches!(r.structure("z2_epsilon:3/2"), Err(Error::EpsilonRange)));
        assert!(r.structure("z2_delta_epsilon:2/5,1/3").is_ok());
        assert!(r.structure("moebius").is_err());
    }

    #[test]
    fn quasimorphisms_by_name() {
        let r = Registry::with_defaults();
        let f2 = r.group("free:2").unwrap();
        let h = r.quasimorphism("brooks:ab", f2.as_ref()).unwrap();
        assert_eq!(h.evaluate(&f2.parse_element("abab").unwrap()).unwrap(), qi(2));
        let z2 = r.group("lattice:2").unwrap();
        let l = r.quasimorphism("linear:2/5,1", z2.as_ref()).unwrap();
        assert_eq!(l.evaluate(&z2.parse_element("(2,-1)").unwrap()).unwrap(), q(-1, 5));
    }
}
