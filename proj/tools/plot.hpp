#pragma once

#include "nfseg/eval.hpp"

#include <string>

namespace nfseg::tools {

/// Writes dx.png and dy.png: estimated vs ground-truth image-plane object
/// translation per frame, one curve pair per object.
void plot_series(const EvalReport& report, const std::string& dir);

/// Writes overlay_<frame>.png per slice: events colored by predicted label,
/// with ground-truth foreground outlined in white.
void plot_overlays(const Recording& recording, const RunOutputs& outputs, const std::string& dir);

}  // namespace nfseg::tools
