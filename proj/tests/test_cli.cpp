#include "doctest.h"

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace {

struct RunResult {
    int code = -1;
    std::string out;
};

RunResult run(const std::string& args) {
    const std::string cmd = std::string(BUNDLETC_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult r;
    std::array<char, 4096> buf;
    while (std::size_t n = fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), n);
    const int status = pclose(pipe);
    r.code = WEXITSTATUS(status);
    return r;
}

std::string data(const std::string& name) {
    return std::string(BUNDLETC_TEST_DATA) + "/" + name;
}

} // namespace

TEST_CASE("typecheck exit codes: 0 clean, 1 diagnosed, 2 unreadable") {
    RunResult ok = run("typecheck " + data("composition_ok.btc"));
    CHECK(ok.code == 0);
    CHECK(ok.out.find("all well-typed") != std::string::npos);

    RunResult bad = run("typecheck " + data("composition_bad.btc"));
    CHECK(bad.code == 1);
    CHECK(bad.out.find("SpaceMismatch") != std::string::npos);
    CHECK(bad.out.find(":6:1:") != std::string::npos); // file:line:col prefix

    RunResult missing = run("typecheck " + data("no_such_file.btc"));
    CHECK(missing.code == 2);
}

TEST_CASE("telescope flag controls type decoration in diagnostics") {
    RunResult high = run("--telescope high typecheck " + data("composition_bad.btc"));
    CHECK(high.out.find("T(U)") != std::string::npos);
    RunResult low = run("--telescope low typecheck " + data("composition_bad.btc"));
    CHECK(low.out.find("T(U)") == std::string::npos);
}

TEST_CASE("geodesic command emits a conserved H column") {
    RunResult r = run("geodesic -c " + data("geodesic_sphere.json"));
    REQUIRE(r.code == 0);
    std::istringstream lines(r.out);
    std::string header;
    std::getline(lines, header);
    CHECK(header == "t,x1,x2,speed,H");
    double h0 = -1, hmaxdev = 0;
    std::string line;
    int rows = 0;
    while (std::getline(lines, line)) {
        const auto last = line.rfind(',');
        const double h = std::stod(line.substr(last + 1));
        if (h0 < 0) h0 = h;
        hmaxdev = std::max(hmaxdev, std::abs(h - h0));
        ++rows;
    }
    CHECK(rows == 1301);
    CHECK(hmaxdev / h0 < 1e-8);
}

TEST_CASE("identical config gives byte-identical output") {
    RunResult a = run("geodesic -c " + data("geodesic_sphere.json"));
    RunResult b = run("geodesic -c " + data("geodesic_sphere.json"));
    CHECK(a.out == b.out);
    RunResult v1 = run("verify --suite tensor --seed 3");
    RunResult v2 = run("verify --suite tensor --seed 3");
    CHECK(v1.code == 0);
    CHECK(v1.out == v2.out);
}

TEST_CASE("chart exit maps to exit code 1 with the exit time") {
    RunResult r = run("geodesic -c " + data("geodesic_exit.json"));
    CHECK(r.code == 1);
    CHECK(r.out.find("chart exit at t=") != std::string::npos);
}

TEST_CASE("schema violations exit 2 with a JSON-pointer path") {
    const std::string path = data("broken_config.json");
    {
        std::ofstream f(path);
        f << R"({"target": {"name": "sphere2"}, "solver": {"x0": [1.5, 0.0], "T": 1.0}})";
    }
    RunResult r = run("geodesic -c " + path);
    CHECK(r.code == 2);
    CHECK(r.out.find("/solver/v0") != std::string::npos);
    std::remove(path.c_str());
}

TEST_CASE("variation command reports a critical geodesic") {
    RunResult r = run("variation -c " + data("variation_critical.json"));
    REQUIRE(r.code == 0);
    CHECK(r.out.find("\"first_variation_formula\"") != std::string::npos);
    // Both first-variation numbers vanish at the critical point.
    const auto pos = r.out.find("\"first_variation_formula\": ");
    const double fv = std::stod(r.out.substr(pos + 28));
    CHECK(std::abs(fv) < 1e-6);
}

TEST_CASE("verify command exits nonzero on unknown suites") {
    CHECK(run("verify --suite tensor --seed 1").code == 0);
    CHECK(run("verify --suite nonsense --seed 1").code == 2);
}

TEST_CASE("harmonic command emits the tension history and the final field") {
    RunResult r = run("harmonic -c " + data("harmonic_torus.json"));
    REQUIRE(r.code == 0);
    // Two CSV sections separated by a blank line.
    const auto split = r.out.find("\n\n");
    REQUIRE(split != std::string::npos);
    CHECK(r.out.rfind("step,sup_tension", 0) == 0);
    CHECK(r.out.find("node,x1,x2,phi1,phi2", split) != std::string::npos);
    // The final recorded tension reached the configured stop threshold.
    std::string history = r.out.substr(0, split);
    const auto last_nl = history.rfind('\n');
    const auto last_comma = history.rfind(',');
    const double final_tension = std::stod(history.substr(last_comma + 1));
    CHECK(final_tension < 1e-6);
    (void)last_nl;
}
