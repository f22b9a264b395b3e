#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"bundletc — strongly typed tensor calculus on chart manifolds"};
    app.require_subcommand(1);

    std::string telescope_name;
    app.add_option("--telescope", telescope_name,
                   "type verbosity in diagnostics: low, mid or high")
        ->check(CLI::IsMember({"low", "mid", "high"}));

    std::string tc_path;
    CLI::App* tc = app.add_subcommand("typecheck", "parse and typecheck a DSL file");
    tc->add_option("file", tc_path, "DSL source file")->required();

    std::string geo_cfg;
    CLI::App* geo = app.add_subcommand("geodesic", "integrate a geodesic, emit CSV");
    geo->add_option("-c,--config", geo_cfg, "JSON config")->required();

    std::string var_cfg;
    CLI::App* var = app.add_subcommand("variation", "first/second variation report as JSON");
    var->add_option("-c,--config", var_cfg, "JSON config")->required();

    std::string harm_cfg;
    CLI::App* harm = app.add_subcommand("harmonic", "harmonic-map heat flow, emit CSV");
    harm->add_option("-c,--config", harm_cfg, "JSON config")->required();

    std::string suite = "all";
    unsigned long long seed = 7;
    CLI::App* ver = app.add_subcommand("verify", "run an invariant suite");
    ver->add_option("--suite", suite, "suite name (types, dsl, tensor, manifolds, covariant, "
                                      "variational, all)");
    ver->add_option("--seed", seed, "random seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : bundletc::cli::exit_usage;
    }

    const int telescope = telescope_name.empty()
                              ? bundletc::cli::default_telescope()
                              : bundletc::cli::telescope_from_name(telescope_name);

    if (tc->parsed())
        return bundletc::cli::cmd_typecheck(tc_path, telescope, std::cout, std::cerr);
    if (geo->parsed()) return bundletc::cli::cmd_geodesic(geo_cfg, std::cout, std::cerr);
    if (var->parsed()) return bundletc::cli::cmd_variation(var_cfg, std::cout, std::cerr);
    if (harm->parsed()) return bundletc::cli::cmd_harmonic(harm_cfg, std::cout, std::cerr);
    if (ver->parsed()) return bundletc::cli::cmd_verify(suite, seed, std::cout, std::cerr);
    return bundletc::cli::exit_usage;
}
