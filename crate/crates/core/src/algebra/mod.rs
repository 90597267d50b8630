//! Task expressions: catalog, parsing, typing, normal forms and enumeration.

mod catalog;
mod enumerate;
mod expr;
mod normalize;
mod parse;
mod typecheck;

pub use catalog::{AtomicName, AtomicSpec, Catalog, CatalogError, Domain, LangTag, Source, TaskKind, IDENTITY, TRUE};
pub use enumerate::enumerate_depth2;
pub use expr::{Operator, TaskExpr};
pub use normalize::{canonicalize, compose, conjoin, normalize, MapFilterNF};
pub use parse::{parse, ParseError};
pub use typecheck::{typecheck, Level, TaskSignature, TypeError};
