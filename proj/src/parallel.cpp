#include "air/parallel.hpp"

namespace air {

std::atomic<bool>& interrupt_flag() {
    static std::atomic<bool> flag{false};
    return flag;
}

}  // namespace air
