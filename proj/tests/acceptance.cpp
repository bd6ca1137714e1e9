// Acceptance runner: one line per criterion, full level in-process, then the
// CLI is run twice at the quick level and the two verdict files compared.
//
//   acceptance <path-to-langmix> [work-dir]

#include "langmix/harness/acceptance.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace langmix::harness;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void line(const std::string& id, bool pass, const std::string& name, const std::string& note) {
    const std::string label = id == "constants" ? "constants" : "criterion " + id;
    std::printf("%-13s %s  %s%s\n", label.c_str(), pass ? "PASS" : "FAIL", name.c_str(), note.c_str());
    std::fflush(stdout);
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: acceptance <langmix> [work-dir]\n");
        return 2;
    }
    const std::string cli = argv[1];
    const std::filesystem::path work = argc > 2 ? argv[2] : std::filesystem::temp_directory_path() / "langmix-acceptance";
    std::filesystem::create_directories(work);

    bool all = true;
    for (const auto& id : check_ids()) {
        if (id == "12")
            continue;
        const auto r = run_check(id, Level::full, kDefaultVerifySeed);
        char note[64];
        std::snprintf(note, sizeof note, " (margin %.4g)", r.margin);
        line(id, r.pass, r.name, note);
        if (!r.pass)
            std::printf("    %s\n", r.details.dump().c_str());
        all = all && r.pass;
    }

    // determinism: worker count in-process, then two separate CLI runs
    const auto inproc = run_check("12", Level::quick, kDefaultVerifySeed);
    const std::string a = (work / "verdict_a.json").string(), b = (work / "verdict_b.json").string();
    std::filesystem::remove(a);
    std::filesystem::remove(b);
    const std::string base = "\"" + cli + "\" verify --level quick --quiet --seed " + std::to_string(kDefaultVerifySeed);
    const int ra = std::system((base + " --out \"" + a + "\"").c_str());
    const int rb = std::system((base + " --out \"" + b + "\"").c_str());
    const std::string ja = slurp(a), jb = slurp(b);
    const bool same = !ja.empty() && ja == jb;
    std::string note = " (two quick verdicts: " + std::to_string(ja.size()) + " bytes, " + (same ? "identical" : "differ") +
                       "; exit codes " + std::to_string(ra) + ", " + std::to_string(rb) + ")";
    line("12", same && inproc.pass, "byte-identical verdicts and worker-count independence", note);
    all = all && same && inproc.pass;

    std::printf("%s\n", all ? "ALL CRITERIA PASS" : "SOME CRITERIA FAIL");
    return all ? 0 : 1;
}
