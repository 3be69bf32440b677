//! One-call compilation: source text in, any backend artifact out.

use crate::error::{Error, Result};
use crate::normalize::{normalize_circuit, NormalForm};
use crate::rtl::{emit_verilog, RtlOptions};
use crate::smt::{emit_smtlib, symexec, EmitMode, SymbolicModel};
use crate::surface::{expand, parse, typecheck, TypedUnit};
use crate::verify::Checker;

/// A parsed, elaborated, typechecked source unit, with accessors for each
/// backend.
///
/// ```
/// use peakforge::pipeline::Compilation;
/// let c = Compilation::from_source(
///     "const W = 8;
///      circuit Inc(x: bv[W]) -> bv[W] { return x + 1 as bv[W]; }",
///     &[],
/// )
/// .unwrap();
/// assert_eq!(c.circuit_names(), ["Inc"]);
/// assert!(c.verilog("Inc", &Default::default()).unwrap().contains("module Inc"));
/// ```
pub struct Compilation {
    unit: TypedUnit,
}

impl Compilation {
    /// Parse, elaborate and typecheck. `defines` override top-level `const`
    /// declarations before widths are computed.
    pub fn from_source(src: &str, defines: &[(String, i128)]) -> Result<Self> {
        Ok(Self { unit: typecheck(&expand(&parse(src)?, defines)?)? })
    }

    pub fn unit(&self) -> &TypedUnit {
        &self.unit
    }

    /// Circuit names, instantiated circuits before their instantiators.
    pub fn circuit_names(&self) -> Vec<&str> {
        self.unit.circuits.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn normal_form(&self, circuit: &str) -> Result<NormalForm> {
        normalize_circuit(&self.unit, circuit)
    }

    pub fn symbolic_model(&self, circuit: &str) -> Result<SymbolicModel> {
        symexec(&self.normal_form(circuit)?)
    }

    /// The circuit's transition function as SMT-LIB 2 text.
    pub fn smtlib(&self, circuit: &str) -> Result<String> {
        emit_smtlib(&self.symbolic_model(circuit)?, EmitMode::TransitionFun, None)
    }

    pub fn verilog(&self, circuit: &str, opts: &RtlOptions) -> Result<String> {
        emit_verilog(&self.normal_form(circuit)?, opts)
    }

    /// A checker for the named property, bound to its circuit.
    pub fn checker(&self, property: &str) -> Result<Checker> {
        let prop = self
            .unit
            .property(property)
            .ok_or_else(|| Error::Verify(format!("no property named `{property}`")))?;
        Checker::new(&self.normal_form(&prop.circuit)?, prop)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SRC: &str = "\
const W = 8;
circuit Inc(x: bv[W]) -> bv[W] {
    return x + 1 as bv[W];
}";

    #[test]
    fn one_call_reaches_every_backend() {
        let c = Compilation::from_source(SRC, &[]).unwrap();
        assert_eq!(c.circuit_names(), ["Inc"]);
        let nf = c.normal_form("Inc").unwrap();
        assert_eq!(nf.inputs.len(), 1);
        assert!(c.smtlib("Inc").unwrap().contains("declare-const"));
        assert!(c.verilog("Inc", &RtlOptions::default()).unwrap().contains("module Inc"));
    }

    #[test]
    fn defines_change_elaboration() {
        let c = Compilation::from_source(SRC, &[("W".to_string(), 4)]).unwrap();
        let nf = c.normal_form("Inc").unwrap();
        assert_eq!(nf.output_ty.encoded_width(), 4);
    }

    #[test]
    fn unknown_properties_are_reported() {
        let c = Compilation::from_source(SRC, &[]).unwrap();
        let Err(err) = c.checker("nope") else { panic!("expected an error") };
        assert!(err.to_string().contains("nope"), "{err}");
    }
}
