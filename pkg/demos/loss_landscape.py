"""Plot-free tour of the preference loss: values and gradients over margins."""

from lexforge.hipo import HipoConfig, LogProbQuad, dpo_loss, dpo_loss_gradients, hipo_loss

cfg = HipoConfig(beta=0.1, nll_lambda=0.1)

print(f"{'margin':>8} {'dpo':>10} {'hipo':>10} {'d/d pc':>10}")
for m in (-20, -5, -1, 0, 1, 5, 20):
    if m >= 0:
        q = LogProbQuad(-1.0, -1.0 - m, -1.0, -1.0, chosen_token_count=10)
    else:
        q = LogProbQuad(-1.0 + m, -1.0, -1.0, -1.0, chosen_token_count=10)
    grads = dpo_loss_gradients(q, cfg.beta)
    print(f"{m:8.1f} {dpo_loss(q, cfg.beta):10.4f} "
          f"{hipo_loss(q, cfg):10.4f} {grads['policy_logp_chosen']:10.4f}")
