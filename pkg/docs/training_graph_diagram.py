"""Generate a Mermaid view of the LangGraph training workflow"""

from pathlib import Path

from dual_diffusion_sr.graph.training_graph import build_training_graph

OUTPUT = Path(__file__).parent / "training_graph.mmd"


def visualize_training_graph():
    app = build_training_graph().compile()
    mermaid_code = app.get_graph().draw_mermaid()

    print("Training workflow (Mermaid format):")
    print("=" * 50)
    print(mermaid_code)
    print("=" * 50)
    print("\nPaste this into https://mermaid.live to render it")

    OUTPUT.write_text(mermaid_code, encoding="utf-8")
    print(f"\nMermaid diagram saved to: {OUTPUT}")


if __name__ == "__main__":
    visualize_training_graph()
