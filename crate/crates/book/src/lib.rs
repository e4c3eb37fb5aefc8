//! Guide chapters, compiled as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}
#[doc = include_str!("../../../book/src/bases.md")]
mod bases {}
#[doc = include_str!("../../../book/src/dlop.md")]
mod dlop {}
#[doc = include_str!("../../../book/src/ldn.md")]
mod ldn {}
#[doc = include_str!("../../../book/src/identification.md")]
mod identification {}
#[doc = include_str!("../../../book/src/filtering.md")]
mod filtering {}
#[doc = include_str!("../../../book/src/sliding.md")]
mod sliding {}
#[doc = include_str!("../../../book/src/benchmark.md")]
mod benchmark {}
#[doc = include_str!("../../../book/src/cli.md")]
mod cli {}
