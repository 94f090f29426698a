// Read-only collapsible hierarchy panel: path labels, member counts, genus
// tooltips. Nodes that appeared since the previous refresh get highlighted.

import { clear, el } from './dom';
import type { HierarchyNodeWire, HierarchyWire } from './types';

export class TreeView {
  private knownIds: Set<number> | null = null;

  constructor(private readonly root: HTMLElement) {}

  private get doc(): Document {
    return this.root.ownerDocument;
  }

  render(hierarchy: HierarchyWire): void {
    clear(this.root);
    const byId = new Map<number, HierarchyNodeWire>();
    for (const node of hierarchy.nodes) {
      byId.set(node.id, node);
    }
    const fresh =
      this.knownIds === null
        ? new Set<number>()
        : new Set(hierarchy.nodes.filter((n) => !this.knownIds!.has(n.id)).map((n) => n.id));
    this.knownIds = new Set(byId.keys());

    const rootNode = byId.get(hierarchy.root);
    if (!rootNode) {
      return;
    }
    const list = el(this.doc, 'ul', { class: 'tree' });
    for (const childId of rootNode.children) {
      list.append(this.renderNode(byId, childId, '', fresh));
    }
    if (rootNode.children.length === 0) {
      list.append(el(this.doc, 'li', { class: 'tree-empty' }, ['no categories yet']));
    }
    this.root.append(list);
  }

  private renderNode(
    byId: Map<number, HierarchyNodeWire>,
    id: number,
    parentPath: string,
    fresh: Set<number>,
  ): HTMLElement {
    const doc = this.doc;
    const node = byId.get(id)!;
    const parent = node.parent === null ? null : byId.get(node.parent);
    const ordinal = parent ? parent.children.indexOf(id) + 1 : 1;
    const path = parentPath ? `${parentPath}_${ordinal}` : String(ordinal);

    const label = el(doc, 'span', { class: 'tree-label', title: node.genus }, [
      `${path}${node.name ? ` · ${node.name}` : ''} (${node.members.length})`,
    ]);
    if (fresh.has(id)) {
      label.classList.add('fresh');
    }
    const item = el(doc, 'li', { 'data-path': path, 'data-node-id': String(id) });
    if (node.children.length === 0) {
      item.append(label);
      return item;
    }
    const summary = el(doc, 'summary', {}, [label]);
    const sublist = el(doc, 'ul', {});
    for (const childId of node.children) {
      sublist.append(this.renderNode(byId, childId, path, fresh));
    }
    const details = el(doc, 'details', { open: '' }, [summary, sublist]);
    item.append(details);
    return item;
  }
}
