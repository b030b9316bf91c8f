#include "matnet/gantt_svg.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace matnet::ffsp {

std::string render_gantt_svg(const FfspInstance& inst, const FfspSchedule& sched) {
  if (auto violation = validate_schedule(inst, sched))
    throw std::invalid_argument("render_gantt_svg: " + *violation);

  const int lanes = inst.stages * inst.machines;
  const int px_per_unit = 24;
  const int lane_height = 26;
  const int label_width = 70;
  const int top = 30;
  const int width = label_width + sched.makespan * px_per_unit + 20;
  const int height = top + lanes * lane_height + 10;

  // Distinct fills cycled by job index.
  static const char* kColors[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                                  "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<text x=\"" << label_width << "\" y=\"18\">makespan " << sched.makespan << "</text>\n";

  for (int s = 0; s < inst.stages; ++s) {
    for (int m = 0; m < inst.machines; ++m) {
      const int lane = s * inst.machines + m;
      const int y = top + lane * lane_height;
      os << "<g class=\"lane\" data-stage=\"" << s << "\" data-machine=\"" << m << "\">\n";
      os << "  <text x=\"4\" y=\"" << y + 17 << "\">S" << s + 1 << "-M" << m + 1 << "</text>\n";
      os << "  <line x1=\"" << label_width << "\" y1=\"" << y + lane_height - 2 << "\" x2=\""
         << width - 10 << "\" y2=\"" << y + lane_height - 2 << "\" stroke=\"#ccc\"/>\n";
      for (int j = 0; j < inst.jobs; ++j) {
        if (sched.machine(s, j) != m) continue;
        const int x = label_width + sched.start(s, j) * px_per_unit;
        const int w = inst.time(s, m, j) * px_per_unit;
        const int end = sched.completion(inst, s, j);
        os << "  <rect class=\"job\" x=\"" << x << "\" y=\"" << y + 2 << "\" width=\"" << w
           << "\" height=\"" << lane_height - 6 << "\" fill=\"" << kColors[j % 10]
           << "\" stroke=\"#333\" data-job=\"" << j << "\" data-start=\"" << sched.start(s, j)
           << "\" data-end=\"" << end << "\"/>\n";
        os << "  <text x=\"" << x + w / 2 - 4 << "\" y=\"" << y + 17 << "\" fill=\"#fff\">" << j
           << "</text>\n";
      }
      os << "</g>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace matnet::ffsp
