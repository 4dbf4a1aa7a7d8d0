//
// confdiff - Copyright 2026 The confdiff Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

namespace confdiff {

/// Asks the C allocator to keep freed blocks instead of returning them to the
/// kernel. Affects the whole process. No effect outside glibc.
void retain_freed_memory();

}  // namespace confdiff
