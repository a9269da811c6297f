//! The `pipage` guide. Each chapter of the book is included here so that
//! its code blocks run as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/matroids.md")]
pub mod matroids {}

#[doc = include_str!("../../../book/src/pipage.md")]
pub mod pipage {}

#[doc = include_str!("../../../book/src/estimators.md")]
pub mod estimators {}

#[doc = include_str!("../../../book/src/thin-trees.md")]
pub mod thin_trees {}

#[doc = include_str!("../../../book/src/applications.md")]
pub mod applications {}

#[doc = include_str!("../../../book/src/verification.md")]
pub mod verification {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
