#include "meandim/common.hpp"

namespace meandim {

const char* version() { return MEANDIM_VERSION_STRING; }

}  // namespace meandim
