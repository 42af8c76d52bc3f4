from anosov_gym.pipelines.decay_pipeline import decay_analysis_pipeline
