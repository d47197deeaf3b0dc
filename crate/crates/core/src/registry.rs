//! Runtime lookup of precoding schemes and power allocators by name.

use crate::error::{Error, Result};
use crate::poweralloc::{EqualPower, Maas, MuRule, PowerAllocator, Waterfilling};
use crate::precoder::{BdScheme, MmseScheme, PrecodingScheme, RbdScheme, ZfScheme};

pub struct Registry {
    precoders: Vec<Box<dyn PrecodingScheme>>,
    allocators: Vec<Box<dyn PowerAllocator>>,
}

impl Registry {
    pub fn empty() -> Self {
        Self { precoders: Vec::new(), allocators: Vec::new() }
    }

    /// ZF, MMSE, BD, RBD and EQUAL, WF, MAAS, MAAS-PRINTED.
    pub fn with_defaults() -> Self {
        let mut r = Self::empty();
        r.register_precoder(Box::new(ZfScheme));
        r.register_precoder(Box::new(MmseScheme));
        r.register_precoder(Box::new(BdScheme));
        r.register_precoder(Box::new(RbdScheme));
        r.register_allocator(Box::new(EqualPower));
        r.register_allocator(Box::new(Waterfilling));
        r.register_allocator(Box::new(Maas { rule: MuRule::ActiveSet }));
        r.register_allocator(Box::new(Maas { rule: MuRule::AsPrinted }));
        r
    }

    /// Adds a scheme, replacing any existing one with the same name.
    pub fn register_precoder(&mut self, scheme: Box<dyn PrecodingScheme>) {
        self.precoders.retain(|p| !p.name().eq_ignore_ascii_case(scheme.name()));
        self.precoders.push(scheme);
    }

    pub fn register_allocator(&mut self, allocator: Box<dyn PowerAllocator>) {
        self.allocators.retain(|a| !a.name().eq_ignore_ascii_case(allocator.name()));
        self.allocators.push(allocator);
    }

    pub fn precoder(&self, name: &str) -> Result<&dyn PrecodingScheme> {
        self.precoders
            .iter()
            .find(|p| p.name().eq_ignore_ascii_case(name.trim()))
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::UnknownStrategy { what: "precoder", name: name.to_string() })
    }

    pub fn allocator(&self, name: &str) -> Result<&dyn PowerAllocator> {
        self.allocators
            .iter()
            .find(|a| a.name().eq_ignore_ascii_case(name.trim()))
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::UnknownStrategy { what: "power allocator", name: name.to_string() })
    }

    pub fn precoder_names(&self) -> Vec<&'static str> {
        self.precoders.iter().map(|p| p.name()).collect()
    }

    pub fn allocator_names(&self) -> Vec<&'static str> {
        self.allocators.iter().map(|a| a.name()).collect()
    }
}

impl Default for Registry {
    fn default() -> Self {
        Self::with_defaults()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poweralloc::{Allocation, AllocationProblem};
    use crate::precoder::PrecoderKind;

    #[test]
    fn lookup_is_case_insensitive() {
        let r = Registry::with_defaults();
        assert_eq!(r.precoder("rbd").unwrap().kind(), PrecoderKind::Rbd);
        assert_eq!(r.precoder(" Zf ").unwrap().name(), "ZF");
        assert_eq!(r.allocator("maas-printed").unwrap().name(), "MAAS-PRINTED");
        assert!(r.allocator("maas").unwrap().quantization_aware());
        assert!(!r.allocator("wf").unwrap().quantization_aware());
    }

    #[test]
    fn unknown_names_are_reported() {
        let r = Registry::with_defaults();
        assert_eq!(r.precoder("THP").err(), Some(Error::UnknownStrategy { what: "precoder", name: "THP".into() }));
        assert!(matches!(r.allocator("greedy"), Err(Error::UnknownStrategy { what: "power allocator", .. })));
    }

    struct Strongest;

    impl PowerAllocator for Strongest {
        fn name(&self) -> &'static str {
            "STRONGEST"
        }
        fn allocate(&self, problem: &AllocationProblem) -> Result<Allocation> {
            let best = (0..problem.phi2.len()).max_by(|&a, &b| problem.phi2[a].total_cmp(&problem.phi2[b])).unwrap();
            let mut omega = vec![0.0; problem.phi2.len()];
            omega[best] = problem.p_total;
            Ok(Allocation { omega, mu: problem.p_total, active: 1, fallback_used: false, trace: Vec::new() })
        }
    }

    #[test]
    fn custom_strategies_can_be_registered() {
        let mut r = Registry::with_defaults();
        r.register_allocator(Box::new(Strongest));
        let p = AllocationProblem { phi2: vec![1.0, 3.0], nu: 2, snr: 1.0, delta: 1.0, p_total: 2.0 };
        assert_eq!(r.allocator("strongest").unwrap().allocate(&p).unwrap().omega, vec![0.0, 2.0]);
        let n = r.allocator_names().len();
        r.register_allocator(Box::new(Strongest));
        assert_eq!(r.allocator_names().len(), n);
        assert_eq!(r.precoder_names(), vec!["ZF", "MMSE", "BD", "RBD"]);
    }
}
