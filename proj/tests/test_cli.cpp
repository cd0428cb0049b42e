#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
};

CliResult run_cli(const std::string& args) {
    CliResult res;
    const std::string cmd = std::string(MSOS_CLI_PATH) + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) res.out.append(buf, n);
    const int rc = pclose(pipe);
    res.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    return res;
}

std::string temp_file(const std::string& name, const std::string& content) {
    const auto path = (std::filesystem::temp_directory_path() / name).string();
    std::ofstream os(path);
    os << content;
    return path;
}

}  // namespace

TEST_CASE("fixture subcommand prints POP JSON") {
    const auto res = run_cli("fixture remark4");
    CHECK(res.exit_code == 0);
    CHECK(res.out.find("\"n\": 1") != std::string::npos);
    CHECK(res.out.find("\"sense\": \"ge\"") != std::string::npos);
}

TEST_CASE("usage errors exit 1 and print nothing on stdout") {
    CHECK(run_cli("certify --order 2").exit_code == 1);  // no pop source
    CHECK(run_cli("certify --order 2").out.empty());
    CHECK(run_cli("solve --fixture four-points --objective \"0,1\" --order 1").exit_code == 1);
    CHECK(run_cli("bogus-subcommand").exit_code == 1);
    CHECK(run_cli("certify --fixture nope --objective \"0,1,1\" --order 1").exit_code == 1);
}

TEST_CASE("infeasible relaxation exits 3") {
    // x1 >= 1 and -x1 >= 0 cannot both hold
    const std::string pop = R"({"n": 1, "constraints": [
        {"poly": {"n": 1, "terms": [{"exp": [1], "coef": 1.0},
                                    {"exp": [0], "coef": -1.0}]}, "sense": "ge"},
        {"poly": {"n": 1, "terms": [{"exp": [1], "coef": -1.0}]}, "sense": "ge"}]})";
    const std::string path = temp_file("msos_cli_infeasible.json", pop);
    const auto res = run_cli("solve --pop " + path + " --objective \"0,1\" --order 1");
    CHECK(res.exit_code == 3);
    CHECK(res.out.empty());
    std::filesystem::remove(path);
}

TEST_CASE("certify output carries the certificate fields") {
    const auto res =
        run_cli("certify --fixture four-points --objective \"0,-1,-1\" --order 2");
    REQUIRE(res.exit_code == 0);
    CHECK(res.out.find("\"classification\": \"exact\"") != std::string::npos);
    CHECK(res.out.find("\"x_hat\"") != std::string::npos);
    CHECK(res.out.find("\"v_hat\": -3.99999") != std::string::npos);
    CHECK(res.out.find("\"gram\"") != std::string::npos);
    CHECK(res.out.find("\"label\": \"s0\"") != std::string::npos);
}

TEST_CASE("member verdicts are three-valued with exit 0") {
    const auto yes = run_cli("member-q --fixture nonconvex --objective \"1,0,0\" --order 1");
    CHECK(yes.exit_code == 0);
    CHECK(yes.out.find("\"verdict\": \"member\"") != std::string::npos);

    const auto no = run_cli("member-q --fixture nonconvex --objective \"-1,0,0\" --order 1");
    CHECK(no.exit_code == 0);
    CHECK(no.out.find("\"verdict\": \"non_member\"") != std::string::npos);

    const auto fast =
        run_cli("member-s --fixture four-points --order 1 --point \"2,2\" --objective \"1,1,1\"");
    CHECK(fast.exit_code == 0);
    CHECK(fast.out.find("\"verdict\": \"non_member\"") != std::string::npos);
    CHECK(fast.out.find("\"fast_path\": true") != std::string::npos);
}

TEST_CASE("scan writes csv and svg with refine transitions") {
    namespace fs = std::filesystem;
    const std::string csv = (fs::temp_directory_path() / "msos_cli_scan.csv").string();
    const std::string svg = (fs::temp_directory_path() / "msos_cli_scan.svg").string();
    const auto res = run_cli("scan --fixture four-points --order 1 --angles 45 --out " + csv +
                             " --svg " + svg + " --refine");
    REQUIRE(res.exit_code == 0);
    CHECK(res.out.find("\"angles\": 45") != std::string::npos);
    CHECK(res.out.find("\"transitions\":") != std::string::npos);
    CHECK(fs::exists(csv));
    CHECK(fs::exists(svg));
    std::ifstream is(csv);
    std::string header;
    std::getline(is, header);
    CHECK(header == "theta_deg,v_relax,v_oracle,classification");
    fs::remove(csv);
    fs::remove(svg);
}

TEST_CASE("polynomial objective from a JSON file") {
    const std::string poly = R"({"n": 2, "terms": [{"exp": [1, 0], "coef": 1.0},
                                                   {"exp": [0, 1], "coef": 1.0}]})";
    const std::string path = temp_file("msos_cli_obj.json", poly);
    const auto res = run_cli("solve --fixture four-points --objective " + path + " --order 2");
    CHECK(res.exit_code == 0);
    CHECK(res.out.find("\"status\": \"optimal\"") != std::string::npos);
    std::filesystem::remove(path);
}
