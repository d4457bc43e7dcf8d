//! Compiles and runs the Rust snippets of the guide in `book/`.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/lasso.md")]
pub mod lasso {}

#[doc = include_str!("../../../book/src/nodewise.md")]
pub mod nodewise {}

#[doc = include_str!("../../../book/src/classo.md")]
pub mod classo_iteration {}

#[doc = include_str!("../../../book/src/comparators.md")]
pub mod comparators {}

#[doc = include_str!("../../../book/src/inference.md")]
pub mod inference {}

#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
