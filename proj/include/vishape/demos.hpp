#ifndef VISHAPE_DEMOS_HPP
#define VISHAPE_DEMOS_HPP

#include <string>
#include <vector>

namespace vishape {

struct DemoEntry {
    std::string name;
    std::string command;
    std::string description;
    std::string config;
};

const std::vector<DemoEntry>& demo_catalog();
const DemoEntry& find_demo(const std::string& name);

} // namespace vishape

#endif
