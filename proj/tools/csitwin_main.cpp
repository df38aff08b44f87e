// SPDX-License-Identifier: Apache-2.0
//
// csitwin - digital-twin aided CSI compression and feedback testbed
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <string>

#include <CLI11.hpp>

#include "csitwin/experiments.hpp"

using namespace csitwin;

namespace {

Scenario infer_scenario(const std::string& scene_ref, const Scene& scene,
                        const std::string& override_tag)
{
    if (!override_tag.empty()) return scenario_from_name(override_tag);
    if (scene_ref == "builtin:twin") return Scenario::Twin;
    if (scene_ref == "builtin:baseline") return Scenario::Baseline;
    if (scene.name.size() >= 5 &&
        scene.name.compare(scene.name.size() - 5, 5, "-twin") == 0)
        return Scenario::Twin;
    return Scenario::Target;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"csitwin - digital-twin aided CSI compression testbed"};
    app.require_subcommand(1);

    // ---- scene ----
    auto* scene_cmd = app.add_subcommand("scene", "scene file utilities");
    scene_cmd->require_subcommand(1);

    std::string scene_path, out_path = "";
    auto* validate = scene_cmd->add_subcommand("validate", "check a scene file");
    validate->add_option("file", scene_path, "scene JSON file")->required();

    auto* derive = scene_cmd->add_subcommand("derive-twin",
                                             "write the foliage-free twin scene");
    derive->add_option("file", scene_path, "target scene JSON file")->required();
    derive->add_option("-o,--output", out_path, "output path")->required();

    std::string builtin_dir = ".";
    auto* builtin =
        scene_cmd->add_subcommand("builtin", "write the three built-in scenes");
    builtin->add_option("-o,--output-dir", builtin_dir, "output directory");

    // ---- dataset ----
    auto* ds_cmd = app.add_subcommand("dataset", "CSI dataset generation and splits");
    ds_cmd->require_subcommand(1);

    std::string gen_scene, gen_out, gen_scenario;
    size_t gen_count = 1000;
    uint64_t gen_seed = 1;
    SystemConfig gen_sys;
    auto* gen = ds_cmd->add_subcommand("generate", "trace, synthesize and preprocess");
    gen->add_option("--scene", gen_scene,
                    "scene file or builtin:{target,twin,baseline}")
        ->required();
    gen->add_option("--count", gen_count, "number of UE samples")->required();
    gen->add_option("--seed", gen_seed, "UE subsampling seed");
    gen->add_option("-o,--output", gen_out, "output dataset file")->required();
    gen->add_option("--scenario", gen_scenario, "provenance tag override");
    gen->add_option("--subcarriers", gen_sys.num_subcarriers, "K");
    gen->add_option("--bandwidth", gen_sys.bandwidth_hz, "bandwidth in Hz");
    gen->add_option("--delay-taps", gen_sys.max_delay_taps, "D");

    std::string split_in, split_train, split_test;
    double split_frac = 0.8;
    uint64_t split_seed = 1;
    auto* split = ds_cmd->add_subcommand("split", "deterministic train/test split");
    split->add_option("file", split_in, "input dataset")->required();
    split->add_option("--frac", split_frac, "train fraction");
    split->add_option("--seed", split_seed, "split seed");
    split->add_option("--train-out", split_train, "train output path")->required();
    split->add_option("--test-out", split_test, "test output path")->required();

    // ---- experiments ----
    auto* exp_cmd = app.add_subcommand("exp", "experiment harness");
    exp_cmd->require_subcommand(1);

    std::string spec_path;
    int replicates_override = 0;

    auto* init_spec = exp_cmd->add_subcommand("init-spec", "write a default spec file");
    std::string spec_out = "experiment.spec.json";
    init_spec->add_option("-o,--output", spec_out, "spec output path");

    auto* direct = exp_cmd->add_subcommand("direct-gen",
                                           "direct-generalization curves");
    direct->add_option("--spec", spec_path, "experiment spec file")->required();

    auto* refine = exp_cmd->add_subcommand("refine", "model refinement comparison");
    refine->add_option("--spec", spec_path, "experiment spec file")->required();

    auto* corr = exp_cmd->add_subcommand("corr-cdf", "correlation CDF tables");
    corr->add_option("--spec", spec_path, "experiment spec file")->required();

    auto* all = exp_cmd->add_subcommand("all", "full pipeline plus trend checks");
    all->add_option("--spec", spec_path, "experiment spec file")->required();
    all->add_option("--replicates", replicates_override, "override replicate count");

    auto* audit = exp_cmd->add_subcommand(
        "audit", "re-derive reported NMSE values from persisted checkpoints");
    audit->add_option("--spec", spec_path, "experiment spec file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) {
            Scene s = load_scene(scene_path);
            auto problems = validate_scene(s);
            if (problems.empty()) {
                std::printf("scene '%s' is valid (%zu buildings, %zu foliage boxes, "
                            "%u grid points)\n",
                            s.name.c_str(), s.buildings.size(), s.foliage.size(),
                            s.service_grid.point_count());
                return 0;
            }
            std::fprintf(stderr, "scene '%s' is invalid:\n", s.name.c_str());
            for (const auto& p : problems) std::fprintf(stderr, "  - %s\n", p.c_str());
            return 1;
        }
        if (derive->parsed()) {
            Scene s = load_scene(scene_path);
            require_valid_scene(s);
            Scene twin = derive_twin_scene(s);
            save_scene(twin, out_path);
            std::printf("wrote %s\n", out_path.c_str());
            return 0;
        }
        if (builtin->parsed()) {
            auto [target, twin, baseline] = builtin_scenes();
            save_scene(target, builtin_dir + "/target.scene.json");
            save_scene(twin, builtin_dir + "/twin.scene.json");
            save_scene(baseline, builtin_dir + "/baseline.scene.json");
            std::printf("wrote target/twin/baseline scene files to %s\n",
                        builtin_dir.c_str());
            return 0;
        }
        if (gen->parsed()) {
            Scene s = resolve_scene(gen_scene);
            Scenario tag = infer_scenario(gen_scene, s, gen_scenario);
            CsiDataset ds = generate_dataset(s, gen_sys, gen_seed, gen_count, tag);
            save_dataset(ds, gen_out);
            std::printf("wrote %zu %s samples to %s\n", ds.size(),
                        scenario_name(ds.scenario), gen_out.c_str());
            return 0;
        }
        if (split->parsed()) {
            CsiDataset ds = load_dataset(split_in);
            auto [train, test] = split_dataset(ds, split_frac, split_seed);
            save_dataset(train, split_train);
            save_dataset(test, split_test);
            std::printf("split %zu samples into %zu train / %zu test\n", ds.size(),
                        train.size(), test.size());
            return 0;
        }
        if (init_spec->parsed()) {
            save_experiment_spec(ExperimentSpec{}, spec_out);
            std::printf("wrote %s\n", spec_out.c_str());
            return 0;
        }
        if (direct->parsed()) {
            ExperimentSpec spec = load_experiment_spec(spec_path);
            ExperimentContext ctx(spec);
            ResultsTable t = run_direct_generalization(ctx);
            std::filesystem::create_directories(spec.output_dir);
            write_direct_csv(t, spec.output_dir + "/direct_generalization.csv");
            std::printf("wrote %s/direct_generalization.csv\n", spec.output_dir.c_str());
            return 0;
        }
        if (refine->parsed()) {
            ExperimentSpec spec = load_experiment_spec(spec_path);
            ExperimentContext ctx(spec);
            ResultsTable t = run_refinement_comparison(ctx);
            std::filesystem::create_directories(spec.output_dir);
            write_refinement_csv(t, spec.output_dir + "/refinement.csv");
            std::printf("wrote %s/refinement.csv\n", spec.output_dir.c_str());
            return 0;
        }
        if (corr->parsed()) {
            ExperimentSpec spec = load_experiment_spec(spec_path);
            ExperimentContext ctx(spec);
            CdfTable t = run_correlation_cdf(ctx);
            std::filesystem::create_directories(spec.output_dir);
            write_cdf_csv(t, spec.output_dir + "/correlation_cdf.csv");
            std::printf("wrote %s/correlation_cdf.csv\n", spec.output_dir.c_str());
            return 0;
        }
        if (all->parsed()) {
            ExperimentSpec spec = load_experiment_spec(spec_path);
            if (replicates_override > 0) spec.replicates = replicates_override;
            bool ok = run_all_experiments(spec);
            std::ifstream sum(spec.output_dir + "/summary.txt");
            std::string line;
            while (std::getline(sum, line)) std::printf("%s\n", line.c_str());
            return ok ? 0 : 2;
        }
        if (audit->parsed()) {
            ExperimentSpec spec = load_experiment_spec(spec_path);
            AuditResult res = audit_experiment_results(spec);
            std::printf("[%s] audit: %s\n", res.pass ? "PASS" : "FAIL",
                        res.detail.c_str());
            return res.pass ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
