#pragma once

#include <string>

#include "matnet/ffsp.hpp"

namespace matnet::ffsp {

// SVG rendering of a schedule: one lane per (stage, machine), colored
// strips labeled with job indices. Strip rects carry data-end
// attributes (completion time) so tools can read the makespan back.
std::string render_gantt_svg(const FfspInstance& inst, const FfspSchedule& sched);

}  // namespace matnet::ffsp
